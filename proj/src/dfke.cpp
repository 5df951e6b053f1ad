#include "lipisim/dfke.hpp"

#include <stdexcept>

namespace lipisim {

u64 fold_key(u64 raw_shared) {
  return keyed_rand({raw_shared, 0, tag::kKeyFold});
}

u64 draw_secret_exponent(NodeId node, u64 rng_seed, u64 p) {
  if (p < 5) throw std::invalid_argument("draw_secret_exponent: p too small");
  return keyed_rand_range({rng_seed ^ (static_cast<u64>(node) << 32), node, tag::kDfkeSecret}, 2,
                          p - 2);
}

KeyTable compute_keytable(NodeId owner, u64 secret_exponent, const ModParams& params,
                          const std::map<NodeId, u64>& publics) {
  KeyTable t;
  t.owner = owner;
  t.secret_exponent = secret_exponent;
  t.public_value = mod_pow(params.g, secret_exponent, params.p);
  for (const auto& [peer, v] : publics) {
    if (peer == owner) continue;
    t.pairwise[peer] = fold_key(mod_pow(v, secret_exponent, params.p));
  }
  return t;
}

DfkeResult dfke_round(const Topology& topo, const SimConfig& config, const ModParams& params,
                      NodeId initiator, u64 rng_seed, u32 phase_nonce) {
  if (params.p < 5 || !is_prime(params.p))
    throw std::invalid_argument("dfke_round: p must be a prime >= 5");
  if (params.g < 2 || params.g >= params.p)
    throw std::invalid_argument("dfke_round: g out of range");

  DfkeResult out;
  out.params = params;
  const auto failures = failures_for_dfke(config);

  // Phase 1: flood the group parameters.
  const auto flood =
      glossy_flood(topo, config, failures, initiator, params.p ^ params.g, phase_nonce);
  out.metrics.accumulate(flood);
  std::set<NodeId> reached;
  for (const auto& [v, entries] : flood.delivered) reached.insert(v);
  for (NodeId v = 1; v <= topo.n; ++v)
    if (!failures.dead.count(v) && !reached.count(v)) out.excluded.insert(v);
  if (reached.empty()) return out;

  // Phase 2: local exponents and public values.
  std::map<NodeId, u64> exponents;
  std::map<NodeId, std::vector<u64>> entries;
  for (NodeId v : reached) {
    exponents[v] = draw_secret_exponent(v, rng_seed, params.p);
    entries[v] = {mod_pow(params.g, exponents[v], params.p)};
    out.publics[v] = entries[v][0];
  }

  // Phase 3: all-to-all sharing of the V_i.
  const auto share = minicast_round(topo, config, failures, entries, 0, phase_nonce + 1);
  out.metrics.accumulate(share);

  // Phase 4: pairwise keys from whatever publics each node actually holds.
  for (NodeId v : reached) {
    std::map<NodeId, u64> seen;
    for (const auto& e : share.delivered.at(v)) seen[e.origin] = e.value;
    out.tables[v] = compute_keytable(v, exponents[v], params, seen);
  }
  out.participants = reached;
  return out;
}

bool key_refresh_due(u32 rounds_since_refresh, const RefreshPolicy& policy,
                     bool membership_changed) {
  return membership_changed || rounds_since_refresh >= policy.round_threshold;
}

}  // namespace lipisim
