#include "lipisim/adversary.hpp"

#include <stdexcept>

namespace lipisim {

const char* to_string(AttackStatus status) {
  switch (status) {
    case AttackStatus::Exact: return "exact";
    case AttackStatus::Ambiguous: return "ambiguous";
    case AttackStatus::Failed: return "failed";
  }
  return "?";
}

Coalition Coalition::assemble(const std::set<NodeId>& members,
                              const std::map<NodeId, KeyTable>& all_tables) {
  Coalition c;
  c.members = members;
  for (NodeId v : members) {
    const auto it = all_tables.find(v);
    if (it == all_tables.end()) throw std::invalid_argument("coalition: member without a key table");
    c.member_keys.emplace(v, it->second);
  }
  return c;
}

std::optional<u64> broadcast_mask(const RoundTrace& trace, NodeId node) {
  for (const auto& phase : trace.phases) {
    if (phase.phase != RoundPhase::Share1) continue;
    for (const auto& e : phase.payloads)
      if (e.origin == node) return e.value;
  }
  return std::nullopt;
}

AttackOutcome lipi_coalition_attack(const RoundTrace& trace, const AggregationSpec& spec,
                                    const Coalition& coalition, NodeId target) {
  if (coalition.members.count(target))
    throw std::invalid_argument("lipi_coalition_attack: target inside the coalition");
  AttackOutcome out;
  out.target = target;
  const auto mask = broadcast_mask(trace, target);
  if (!mask) return out;  // nothing of the target's on the air

  std::set<NodeId> participants(trace.participants.begin(), trace.participants.end());
  u64 residual = *mask;
  for (NodeId member : coalition.members) {
    if (!participants.count(member)) continue;
    const auto& table = coalition.member_keys.at(member);
    const auto key = table.pairwise.find(target);
    if (key == table.pairwise.end()) continue;
    // The member regenerates the exact term the target added for it.
    const u64 q = noise_for(spec, key->second, trace.seq_no, target, member);
    if (spec.additive())
      residual -= q;
    else
      residual = mul_mod(residual, mod_inv(q, spec.gm_modulus), spec.gm_modulus);
  }
  out.residual = residual;

  bool covers_all = true;
  for (NodeId v : participants)
    if (v != target && !coalition.members.count(v)) covers_all = false;
  if (covers_all) {
    out.status = AttackStatus::Exact;
    out.recovered = residual;
  } else {
    out.status = AttackStatus::Ambiguous;
  }
  return out;
}

AttackOutcome ppmp_adjacent_attack(const PpmpRound& round, NodeId target,
                                   const std::set<NodeId>& coalition) {
  AttackOutcome out;
  out.target = target;
  if (coalition.count(target)) throw std::invalid_argument("ppmp_adjacent_attack: target colludes");
  const u64 p = round.params.p_enc;
  const u64 p2 = round.params.modulus();

  const auto cipher = round.cipher_broadcast.find(target);
  const auto g_r = round.key_broadcast.find(target);
  if (cipher == round.cipher_broadcast.end() || g_r == round.key_broadcast.end()) {
    out.status = AttackStatus::Failed;  // key-round payloads missing
    return out;
  }
  out.residual = cipher->second;

  // Ring neighbors of the target by participant order.
  std::vector<NodeId> ring(round.result.participants.begin(), round.result.participants.end());
  const auto pos = std::find(ring.begin(), ring.end(), target);
  if (pos == ring.end()) {
    out.status = AttackStatus::Failed;
    return out;
  }
  const std::size_t i = static_cast<std::size_t>(pos - ring.begin());
  const NodeId right = ring[(i + 1) % ring.size()];
  const NodeId left = ring[(i + ring.size() - 1) % ring.size()];
  if (!coalition.count(right) || !coalition.count(left)) {
    out.status = AttackStatus::Ambiguous;  // one of the masking exponents stays unknown
    return out;
  }

  // (g^{r_t})^{r_right} / (g^{r_t})^{r_left} = R_target.
  const u64 up = mod_pow(g_r->second, round.exponents.at(right), p2);
  const u64 down = mod_pow(g_r->second, round.exponents.at(left), p2);
  const u64 r_target = mul_mod(up, mod_inv(down, p2), p2);
  const u64 unmasked = mul_mod(cipher->second, mod_inv(r_target, p2), p2);
  if ((unmasked - 1) % p != 0) {
    out.status = AttackStatus::Failed;
    return out;
  }
  out.status = AttackStatus::Exact;
  out.recovered = (unmasked - 1) / p;
  return out;
}

ReuseWitness ppmp_key_reuse_attack(const PpmpRound& round_t, const PpmpRound& round_t1,
                                   NodeId target, u64 secret_t, u64 secret_t1) {
  if (round_t.params.p_enc != round_t1.params.p_enc)
    throw std::invalid_argument("ppmp_key_reuse_attack: mismatched parameters");
  const u64 p = round_t.params.p_enc;
  const u64 p2 = round_t.params.modulus();
  ReuseWitness w;
  const u64 c0 = round_t.cipher_broadcast.at(target);
  const u64 c1 = round_t1.cipher_broadcast.at(target);
  w.ratio = mul_mod(c1, mod_inv(c0, p2), p2);
  const u64 m0 = (1 + mul_mod(secret_t % p, p, p2)) % p2;
  const u64 m1 = (1 + mul_mod(secret_t1 % p, p, p2)) % p2;
  w.expected = mul_mod(m1, mod_inv(m0, p2), p2);
  w.matched = w.ratio == w.expected;
  return w;
}

bool sss_subset_ambiguity(const std::vector<std::pair<u64, u64>>& shares, u32 degree, u64 q) {
  if (q > 101 || !is_prime(q))
    throw std::invalid_argument("sss_subset_ambiguity: brute-force scale needs a prime q <= 101");
  if (shares.size() > degree) return false;  // unique interpolation exists
  if (shares.empty()) return true;

  double space = 1.0;
  for (u32 k = 0; k < degree; ++k) space *= static_cast<double>(q);
  if (space > 3e7) throw std::invalid_argument("sss_subset_ambiguity: coefficient space too large");

  // For every candidate constant term, search the full coefficient space
  // for a polynomial matching all observed shares.
  for (u64 candidate = 0; candidate < q; ++candidate) {
    bool found = false;
    std::vector<u64> coeffs(degree + 1, 0);
    coeffs[0] = candidate;
    const u64 combos = static_cast<u64>(space);
    for (u64 idx = 0; idx < combos && !found; ++idx) {
      u64 rest = idx;
      for (u32 k = 1; k <= degree; ++k) {
        coeffs[k] = rest % q;
        rest /= q;
      }
      bool all_match = true;
      for (const auto& [y, v] : shares) {
        u64 acc = 0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
          acc = (mul_mod(acc, y % q, q) + *it) % q;
        if (acc != v % q) {
          all_match = false;
          break;
        }
      }
      found = all_match;
    }
    if (!found) return false;
  }
  return true;
}

bool additive_residual_ambiguity(u64 residual, u32 unknown_terms, u64 q) {
  if (q > 101 || !is_prime(q))
    throw std::invalid_argument("additive_residual_ambiguity: needs a prime q <= 101");
  if (unknown_terms == 0) return false;  // the residual IS the secret
  residual %= q;
  // Enumerate the unknown noise tuples reachable and collect the
  // candidate secrets they explain.
  std::vector<bool> reachable(q, false);
  std::vector<u64> sums{0};
  for (u32 term = 0; term < unknown_terms && term < 2; ++term) {
    std::vector<u64> next;
    for (u64 base : sums)
      for (u64 noise = 0; noise < q; ++noise) next.push_back((base + noise) % q);
    sums.swap(next);
  }
  for (u64 noise_sum : sums) reachable[(residual + q - noise_sum % q) % q] = true;
  for (u64 s = 0; s < q; ++s)
    if (!reachable[s]) return false;
  return true;
}

bool lipi_rate_of_reuse_check(const std::vector<RoundTrace>& traces,
                              const std::vector<std::map<NodeId, u64>>& secrets_per_round,
                              NodeId target) {
  if (traces.size() != secrets_per_round.size())
    throw std::invalid_argument("lipi_rate_of_reuse_check: traces and secrets must align");
  if (traces.size() < 2) return true;  // vacuous
  for (std::size_t r = 0; r + 1 < traces.size(); ++r) {
    const auto m0 = broadcast_mask(traces[r], target);
    const auto m1 = broadcast_mask(traces[r + 1], target);
    if (!m0 || !m1) continue;
    const u64 mask_delta = *m1 - *m0;
    const u64 secret_delta = secrets_per_round[r + 1].at(target) - secrets_per_round[r].at(target);
    if (mask_delta == secret_delta) return false;  // temporal evolution leaked
  }
  return true;
}

}  // namespace lipisim
