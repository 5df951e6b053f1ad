#pragma once

#include <map>
#include <optional>
#include <set>

#include "lipisim/modmath.hpp"
#include "lipisim/stnet.hpp"

namespace lipisim {

/// One node's view after key exchange: its secret exponent, its public
/// value, and the 64-bit-folded pairwise keys. P_ij on node i equals
/// P_ji on node j for every established pair.
struct KeyTable {
  NodeId owner = 0;
  u64 secret_exponent = 0;            // d_i
  u64 public_value = 0;               // V_i = g^d_i mod p
  std::map<NodeId, u64> pairwise;     // peer -> folded P_ij
};

struct DfkeResult {
  std::map<NodeId, KeyTable> tables;  // one per participating node
  std::set<NodeId> participants;      // nodes the flood reached and that shared V
  std::set<NodeId> excluded;          // alive nodes the flood failed to reach
  std::map<NodeId, u64> publics;      // broadcast V_i values (trace material)
  ModParams params;
  NetMetrics metrics;                 // summed over flood + all-to-all phases
};

/// Reduces a raw shared group element to the uniform 64-bit key width.
u64 fold_key(u64 raw_shared);

/// Per-node secret exponent drawn deterministically from (node, run seed),
/// uniform over [2, p-2].
u64 draw_secret_exponent(NodeId node, u64 rng_seed, u64 p);

/// Pairwise keys of one node given everyone's public values.
KeyTable compute_keytable(NodeId owner, u64 secret_exponent, const ModParams& params,
                          const std::map<NodeId, u64>& publics);

/// Full exchange: flood (p, g) from the initiator, share all V_i via one
/// all-to-all round, then fold g^(d_i d_j) pairwise. Nodes the flood does
/// not reach are excluded and reported.
DfkeResult dfke_round(const Topology& topo, const SimConfig& config, const ModParams& params,
                      NodeId initiator, u64 rng_seed, u32 phase_nonce = 0);

struct RefreshPolicy {
  u32 round_threshold = 100;
};

/// True when the pairwise keys are due for renewal: enough rounds have
/// passed or the participant set changed.
bool key_refresh_due(u32 rounds_since_refresh, const RefreshPolicy& policy,
                     bool membership_changed = false);

}  // namespace lipisim
