#pragma once

#include <optional>

#include "lipisim/baselines.hpp"
#include "lipisim/lipi.hpp"

namespace lipisim {

enum class AttackStatus { Exact, Ambiguous, Failed };

const char* to_string(AttackStatus status);

struct AttackOutcome {
  NodeId target = 0;
  AttackStatus status = AttackStatus::Failed;
  std::optional<u64> recovered;  // set only when Exact
  u64 residual = 0;              // the still-masked value otherwise
};

/// Semi-honest coalition: member ids plus exactly the private state those
/// members legitimately hold (their key tables). Everything else the
/// attack may touch must come from broadcast trace material.
struct Coalition {
  std::set<NodeId> members;
  std::map<NodeId, KeyTable> member_keys;

  static Coalition assemble(const std::set<NodeId>& members,
                            const std::map<NodeId, KeyTable>& all_tables);
};

/// Strips every pairwise noise term the coalition can regenerate from the
/// target's broadcast mask. Exact exactly when the coalition is everyone
/// but the target; otherwise the residual stays masked by the unknown
/// pairwise terms.
AttackOutcome lipi_coalition_attack(const RoundTrace& trace, const AggregationSpec& spec,
                                    const Coalition& coalition, NodeId target);

/// The target's two ring neighbors reconstruct R_target from their own
/// exponents plus the target's round-A broadcast, divide it out of
/// C_target, and read the secret. Any other two-member coalition stays
/// ambiguous.
AttackOutcome ppmp_adjacent_attack(const PpmpRound& round, NodeId target,
                                   const std::set<NodeId>& coalition);

struct ReuseWitness {
  u64 ratio = 0;     // C_target(t+1) / C_target(t) mod p^2
  u64 expected = 0;  // (1 + x(t+1) p) / (1 + x(t) p) mod p^2
  bool matched = false;
};

/// Under exponent reuse the ring mask cancels in the ratio of consecutive
/// ciphertexts, exposing the relation between the two secrets; with fresh
/// exponents the ratio stays masked and the attack fails.
ReuseWitness ppmp_key_reuse_attack(const PpmpRound& round_t, const PpmpRound& round_t1,
                                   NodeId target, u64 secret_t, u64 secret_t1);

/// True when every candidate secret in F_q is consistent with the k
/// given shares of a degree-t dealer polynomial, verified by exhaustive
/// enumeration of the coefficient space (small q only). k > t shares pin
/// the polynomial and the ambiguity collapses.
bool sss_subset_ambiguity(const std::vector<std::pair<u64, u64>>& shares, u32 degree, u64 q);

/// Small-field mirror of the additive masking argument: with u unknown
/// noise terms over F_q, every candidate secret explains the residual.
bool additive_residual_ambiguity(u64 residual, u32 unknown_terms, u64 q);

/// Checks that masked-value deltas across rounds never equal the secret
/// deltas (wrapping) for the target, i.e. reusing pairwise keys across
/// advancing sequence numbers leaks no temporal evolution. Returns false
/// as soon as one round pair leaks.
bool lipi_rate_of_reuse_check(const std::vector<RoundTrace>& traces,
                              const std::vector<std::map<NodeId, u64>>& secrets_per_round,
                              NodeId target);

/// The share-1 broadcast mask of one node, if the trace carries it.
std::optional<u64> broadcast_mask(const RoundTrace& trace, NodeId node);

}  // namespace lipisim
