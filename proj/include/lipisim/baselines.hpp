#pragma once

#include <map>
#include <optional>
#include <vector>

#include "lipisim/dfke.hpp"
#include "lipisim/lipi.hpp"
#include "lipisim/stnet.hpp"

namespace lipisim {

/// Ring-masking parameters. All arithmetic runs modulo p_enc^2 with
/// g_ring a generator of that group; the ring order is the participant
/// id order, wrapping around.
struct PpmpParams {
  u64 p_enc = 2147483647ull;  // prime; the true sum must stay below it
  u64 g_ring = 0;             // 0: derived from p_enc

  u64 modulus() const { return p_enc * p_enc; }
};

struct PpmpRound {
  AggregateResult result;
  PpmpParams params;
  u32 seq_no = 0;
  std::map<NodeId, u64> key_broadcast;     // g^{r_i} mod p^2, round A payloads
  std::map<NodeId, u64> cipher_broadcast;  // C_i mod p^2, round B payloads
  std::map<NodeId, u64> exponents;         // private r_i (simulation-side knowledge)
  bool overflow = false;                   // true sum exceeded p_enc; value flagged
};

/// Two chained all-to-all rounds: fresh exponents and g^{r_i} first, then
/// the masked C_i = (1 + x_i p) R_i with the telescoping ring ratio
/// R_i = (g^{r_right} / g^{r_left})^{r_i}. Every node recovers the sum
/// from (prod C_i - 1) / p. `exponent_seq` reuses a previous round's
/// exponents when set (the key-reuse weakness demonstration).
PpmpRound ppmp_round(const Topology& topo, const SimConfig& config,
                     const std::map<NodeId, u64>& secrets, u64 rng_seed, u32 seq_no,
                     PpmpParams params = {},
                     std::optional<u32> exponent_seq = std::nullopt,
                     const std::map<NodeId, u64>* forced_exponents = nullptr);

/// Interpolates the polynomial through `points` at zero over F_q.
/// Points are (y, value) pairs with distinct nonzero y.
u64 lagrange_at_zero(const std::vector<std::pair<u64, u64>>& points, u64 q);

/// Lagrange weights at zero for the point set `ys` (distinct, nonzero).
std::vector<u64> lagrange_weights_at_zero(const std::vector<u64>& ys, u64 q);

/// XOR keystream cipher keyed by the pairwise secret; the stand-in for
/// an encrypted channel between share dealer and recipient.
u64 share_encrypt(u64 plaintext, u64 pairwise_key, u32 seq_no);
u64 share_decrypt(u64 ciphertext, u64 pairwise_key, u32 seq_no);

struct ShareRound {
  AggregateResult result;
  u64 field_prime = 0;
  u32 degree = 0;  // polynomial degree actually used
  std::map<NodeId, std::vector<u64>> coefficients;        // private dealer polynomials
  std::map<NodeId, std::map<NodeId, u64>> cipher_shares;  // dealer -> recipient -> ciphertext
  std::map<NodeId, std::vector<NodeId>> recipients;       // dealer -> share recipients
  std::map<NodeId, u64> k_values;                         // broadcast reconstruction values
  bool overflow = false;
};

/// Secret sharing over F_q: every dealer fits a degree-t polynomial with
/// its secret as constant term, sends encrypted evaluations P_i(j) to
/// every other node over one all-to-all round, each node sums its
/// received column into K_j, and a plaintext round of K values lets every
/// node interpolate the summed polynomial at zero.
ShareRound sss_round(const Topology& topo, const SimConfig& config,
                     const std::map<NodeId, u64>& secrets, const std::map<NodeId, KeyTable>& keys,
                     u64 field_prime, u32 degree, u32 seq_no);

/// Neighborhood-restricted variant: each dealer spreads d Lagrange-
/// pre-weighted shares of a degree d-1 polynomial only to its d nearest
/// neighbors within hop_limit; the reconstruction round stays network
/// wide and the aggregate is the plain sum of all K values. Requires
/// every node to own at least d neighbors within hop_limit.
ShareRound nsss_round(const Topology& topo, const SimConfig& config,
                      const std::map<NodeId, u64>& secrets, const std::map<NodeId, KeyTable>& keys,
                      u64 field_prime, u32 share_count, u32 hop_limit, u32 seq_no);

/// The d nearest key-holding neighbors of `node` within hop_limit,
/// ordered by (distance, id). Throws when fewer than d exist. An empty
/// candidate set means every topology node is eligible.
std::vector<NodeId> nsss_recipients(const Topology& topo, NodeId node, u32 share_count,
                                    u32 hop_limit, const std::set<NodeId>& candidates = {});

}  // namespace lipisim
