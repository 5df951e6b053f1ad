#include "lipisim/baselines.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace lipisim {

namespace {

std::vector<Entry> transmitted_payloads(const NetMetrics& m) {
  std::set<Entry> seen;
  for (const auto& [node, entries] : m.delivered) {
    for (const auto& e : entries)
      if (e.origin != node) seen.insert(e);
  }
  return {seen.begin(), seen.end()};
}

PhaseRecord record_phase(RoundPhase phase, const char* kind, const NetMetrics& m) {
  PhaseRecord r;
  r.phase = phase;
  r.kind = kind;
  r.payloads = transmitted_payloads(m);
  r.duration = m.duration;
  r.slots = m.slots;
  return r;
}

std::set<NodeId> alive_participants(const Topology& topo, const SimConfig& config) {
  const auto dead = failures_for_sync(config).dead;
  std::set<NodeId> alive;
  for (NodeId v = 1; v <= topo.n; ++v)
    if (!dead.count(v)) alive.insert(v);
  return alive;
}

u64 poly_eval(const std::vector<u64>& coeffs, u64 y, u64 q) {
  u64 acc = 0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it)
    acc = (mul_mod(acc, y % q, q) + *it) % q;
  return acc;
}

}  // namespace

PpmpRound ppmp_round(const Topology& topo, const SimConfig& config,
                     const std::map<NodeId, u64>& secrets, u64 rng_seed, u32 seq_no,
                     PpmpParams params, std::optional<u32> exponent_seq,
                     const std::map<NodeId, u64>* forced_exponents) {
  if (!is_prime(params.p_enc)) throw std::invalid_argument("ppmp: p_enc must be prime");
  if (params.p_enc >= (1ull << 32)) throw std::invalid_argument("ppmp: p_enc^2 must fit in 64 bits");
  if (params.g_ring == 0) params.g_ring = find_generator_mod_p2(params.p_enc);
  const u64 p = params.p_enc;
  const u64 p2 = params.modulus();
  const u64 group_order = p * (p - 1);

  PpmpRound out;
  out.params = params;
  out.seq_no = seq_no;
  auto& res = out.result;
  res.seq_no = seq_no;
  res.trace.seq_no = seq_no;

  const auto alive = alive_participants(topo, config);
  if (alive.size() < 3) throw std::invalid_argument("ppmp: needs at least 3 nodes in the ring");
  for (NodeId v : alive) {
    if (!secrets.count(v)) throw std::invalid_argument("ppmp: missing secret");
    res.participants.insert(v);
    res.trace.participants.push_back(v);
  }
  const NodeId initiator = *alive.begin();

  u64 true_sum = 0;
  for (NodeId v : alive) {
    if (secrets.at(v) >= p) out.overflow = true;
    true_sum += secrets.at(v);
  }
  if (true_sum >= p) out.overflow = true;  // recovered value will wrap; flagged

  // Sync flood, as every round of the framework starts with one.
  const PhaseFailures failures = failures_for_share(config);
  const auto sync = glossy_flood(topo, config, failures_for_sync(config), initiator, seq_no,
                                 seq_no * 16 + 0);
  res.metrics.accumulate(sync);
  res.trace.phases.push_back(record_phase(RoundPhase::SyncFlood, "glossy", sync));

  // Round A: fresh ring exponents, g^{r_i} shared all-to-all.
  const u32 r_seq = exponent_seq.value_or(seq_no);
  std::map<NodeId, std::vector<u64>> key_entries;
  for (NodeId v : alive) {
    u64 r = forced_exponents && forced_exponents->count(v)
                ? forced_exponents->at(v)
                : keyed_rand_range({rng_seed ^ (static_cast<u64>(v) << 24), r_seq, tag::kRingExp},
                                   2, group_order - 2);
    out.exponents[v] = r;
    out.key_broadcast[v] = mod_pow(params.g_ring, r, p2);
    key_entries[v] = {out.key_broadcast[v]};
  }
  const auto round_a = minicast_round(topo, config, failures, key_entries, 0, seq_no * 16 + 1);
  res.metrics.accumulate(round_a);
  res.trace.phases.push_back(record_phase(RoundPhase::Share1, "minicast", round_a));

  // Round B: every node masks with its ring ratio and shares C_i.
  const std::vector<NodeId> ring(alive.begin(), alive.end());
  const auto ring_index = [&](NodeId v) {
    return static_cast<std::size_t>(std::find(ring.begin(), ring.end(), v) - ring.begin());
  };
  std::map<NodeId, std::vector<u64>> cipher_entries;
  for (NodeId v : alive) {
    const std::size_t i = ring_index(v);
    const NodeId right = ring[(i + 1) % ring.size()];
    const NodeId left = ring[(i + ring.size() - 1) % ring.size()];
    const auto& view = round_a.delivered.at(v);
    u64 g_right = 0, g_left = 0;
    for (const auto& e : view) {
      if (e.origin == right) g_right = e.value;
      if (e.origin == left) g_left = e.value;
    }
    if (g_right == 0 || g_left == 0) {
      res.status = RoundStatus::IncompleteDelivery;
      return out;
    }
    const u64 ratio = mul_mod(g_right, mod_inv(g_left, p2), p2);
    const u64 r_i = mod_pow(ratio, out.exponents[v], p2);
    const u64 c = mul_mod((1 + mul_mod(secrets.at(v) % p, p, p2)) % p2, r_i, p2);
    out.cipher_broadcast[v] = c;
    cipher_entries[v] = {c};
  }
  const auto round_b = minicast_round(topo, config, failures, cipher_entries, 0, seq_no * 16 + 2);
  res.metrics.accumulate(round_b);
  res.trace.phases.push_back(record_phase(RoundPhase::Share2Recovery, "minicast", round_b));
  res.trace.share_view = round_b.delivered;

  // Every node multiplies the C_i and strips the 1 + p*sum expansion.
  for (NodeId v : alive) {
    const auto& view = round_b.delivered.at(v);
    if (view.size() != alive.size()) {
      res.status = RoundStatus::IncompleteDelivery;
      return out;
    }
    u64 prod = 1;
    for (const auto& e : view) prod = mul_mod(prod, e.value, p2);
    if ((prod - 1) % p != 0) {
      res.status = RoundStatus::IncompleteDelivery;
      return out;
    }
    AggregateValue agg;
    agg.family = AggregationFamily::Sum;
    agg.integer_value = (prod - 1) / p;
    agg.real_value = static_cast<double>(agg.integer_value);
    res.per_node[v] = agg;
  }
  res.aggregate = res.per_node.begin()->second;
  for (const auto& [v, agg] : res.per_node) {
    if (agg.integer_value != res.aggregate.integer_value) {
      res.status = RoundStatus::IncompleteDelivery;
      return out;
    }
  }
  res.contributors = alive;
  res.survivors = alive;
  res.status = RoundStatus::Ok;
  return out;
}

std::vector<u64> lagrange_weights_at_zero(const std::vector<u64>& ys, u64 q) {
  for (std::size_t a = 0; a < ys.size(); ++a) {
    if (ys[a] % q == 0) throw std::invalid_argument("lagrange: zero evaluation point");
    for (std::size_t b = a + 1; b < ys.size(); ++b)
      if (ys[a] % q == ys[b] % q) throw std::invalid_argument("lagrange: duplicate evaluation point");
  }
  std::vector<u64> weights(ys.size(), 1);
  for (std::size_t k = 0; k < ys.size(); ++k) {
    u64 w = 1;
    for (std::size_t m = 0; m < ys.size(); ++m) {
      if (m == k) continue;
      const u64 ym = ys[m] % q;
      const u64 yk = ys[k] % q;
      const u64 diff = (ym + q - yk) % q;
      w = mul_mod(w, mul_mod(ym, mod_inv(diff, q), q), q);
    }
    weights[k] = w;
  }
  return weights;
}

u64 lagrange_at_zero(const std::vector<std::pair<u64, u64>>& points, u64 q) {
  if (points.empty()) throw std::invalid_argument("lagrange: no points");
  std::vector<u64> ys;
  for (const auto& [y, v] : points) ys.push_back(y);
  const auto weights = lagrange_weights_at_zero(ys, q);
  u64 acc = 0;
  for (std::size_t k = 0; k < points.size(); ++k)
    acc = (acc + mul_mod(points[k].second % q, weights[k], q)) % q;
  return acc;
}

u64 share_encrypt(u64 plaintext, u64 pairwise_key, u32 seq_no) {
  return plaintext ^ keyed_rand({pairwise_key, seq_no, tag::kKeystream});
}

u64 share_decrypt(u64 ciphertext, u64 pairwise_key, u32 seq_no) {
  return share_encrypt(ciphertext, pairwise_key, seq_no);  // XOR is its own inverse
}

namespace {

// Shared scaffolding for the SSS and NSSS rounds; the variants differ in
// recipients, polynomial degree, share weighting, and outreach.
struct ShareScheme {
  u64 q = 0;
  u32 degree = 0;
  u32 hop_limit = 0;  // 0: full outreach
  bool weighted = false;
};

ShareRound run_share_protocol(const Topology& topo, const SimConfig& config,
                              const std::map<NodeId, u64>& secrets,
                              const std::map<NodeId, KeyTable>& keys,
                              const std::map<NodeId, std::vector<NodeId>>& recipients,
                              const ShareScheme& scheme, u32 seq_no) {
  ShareRound out;
  out.field_prime = scheme.q;
  out.degree = scheme.degree;
  out.recipients = recipients;
  auto& res = out.result;
  res.seq_no = seq_no;
  res.trace.seq_no = seq_no;

  std::set<NodeId> alive;
  for (const auto& [v, table] : keys) alive.insert(v);
  for (NodeId v : alive) {
    if (!secrets.count(v)) throw std::invalid_argument("share round: missing secret");
    res.participants.insert(v);
    res.trace.participants.push_back(v);
  }
  const std::size_t n = alive.size();
  if (scheme.q <= topo.n) throw std::invalid_argument("share round: field must exceed node ids");
  const NodeId initiator = *alive.begin();

  u64 true_sum = 0;
  for (NodeId v : alive) true_sum += secrets.at(v);
  if (true_sum >= scheme.q) out.overflow = true;

  const auto sync =
      glossy_flood(topo, config, failures_for_sync(config), initiator, seq_no, seq_no * 16 + 4);
  res.metrics.accumulate(sync);
  res.trace.phases.push_back(record_phase(RoundPhase::SyncFlood, "glossy", sync));

  // Dealer polynomials: constant term = secret, higher coefficients drawn
  // from the seeded stream.
  for (NodeId dealer : alive) {
    std::vector<u64> coeffs{secrets.at(dealer) % scheme.q};
    for (u32 k = 1; k <= scheme.degree; ++k) {
      coeffs.push_back(
          keyed_rand({config.rng_seed ^ (static_cast<u64>(dealer) << 16 | k), seq_no,
                      tag::kPolyCoeff}) %
          scheme.q);
    }
    out.coefficients[dealer] = coeffs;
  }

  // Per-dealer Lagrange weights over its recipient point set (NSSS).
  std::map<NodeId, std::vector<u64>> weights;
  if (scheme.weighted) {
    for (NodeId dealer : alive) {
      std::vector<u64> ys;
      for (NodeId r : recipients.at(dealer)) ys.push_back(r);
      weights[dealer] = lagrange_weights_at_zero(ys, scheme.q);
    }
  }

  // Share round: one encrypted entry per (dealer, recipient) sub-slot.
  std::map<NodeId, std::vector<u64>> share_entries;
  for (NodeId dealer : alive) {
    const auto& rec = recipients.at(dealer);
    std::vector<u64> section;
    for (std::size_t k = 0; k < rec.size(); ++k) {
      u64 value = poly_eval(out.coefficients[dealer], rec[k], scheme.q);
      if (scheme.weighted) value = mul_mod(value, weights[dealer][k], scheme.q);
      const u64 cipher = share_encrypt(value, keys.at(dealer).pairwise.at(rec[k]), seq_no);
      out.cipher_shares[dealer][rec[k]] = cipher;
      section.push_back(cipher);
    }
    share_entries[dealer] = section;
  }
  const PhaseFailures failures = failures_for_share(config);
  const auto share = minicast_round(topo, config, failures, share_entries, scheme.hop_limit,
                                    seq_no * 16 + 5);
  res.metrics.accumulate(share);
  res.trace.phases.push_back(record_phase(RoundPhase::Share1, "minicast", share));

  // Column sums: node j decrypts every share addressed to it.
  std::map<NodeId, std::vector<u64>> k_entries;
  for (NodeId j : alive) {
    u64 k_j = 0;
    bool complete = true;
    std::size_t expected = 0;
    for (NodeId dealer : alive) {
      const auto& rec = recipients.at(dealer);
      const auto pos = std::find(rec.begin(), rec.end(), j);
      if (pos == rec.end()) continue;  // dealer does not address j
      ++expected;
      const u16 index = static_cast<u16>(pos - rec.begin());
      bool found = false;
      for (const auto& e : share.delivered.at(j)) {
        if (e.origin == dealer && e.index == index) {
          k_j = (k_j + share_decrypt(e.value, keys.at(j).pairwise.at(dealer), seq_no)) % scheme.q;
          found = true;
          break;
        }
      }
      if (!found) complete = false;
    }
    if (!scheme.weighted) {
      // SSS: the dealer's own column value joins locally, unencrypted.
      k_j = (k_j + poly_eval(out.coefficients[j], j, scheme.q)) % scheme.q;
    }
    if (!complete) {
      out.result.status = RoundStatus::IncompleteDelivery;
      return out;
    }
    out.k_values[j] = k_j;
    k_entries[j] = {k_j};
  }

  // Reconstruction round: plaintext K values, full outreach.
  const auto recon = minicast_round(topo, config, failures, k_entries, 0, seq_no * 16 + 6);
  res.metrics.accumulate(recon);
  res.trace.phases.push_back(record_phase(RoundPhase::Share2Recovery, "minicast", recon));
  res.trace.share_view = recon.delivered;

  for (NodeId v : alive) {
    const auto& view = recon.delivered.at(v);
    if (view.size() != n) {
      res.status = RoundStatus::IncompleteDelivery;
      return out;
    }
    u64 value = 0;
    if (scheme.weighted) {
      for (const auto& e : view) value = (value + e.value) % scheme.q;
    } else {
      std::vector<std::pair<u64, u64>> points;
      for (const auto& e : view) {
        points.emplace_back(e.origin, e.value);
        if (points.size() == static_cast<std::size_t>(scheme.degree) + 1) break;
      }
      if (points.size() < static_cast<std::size_t>(scheme.degree) + 1) {
        res.status = RoundStatus::IncompleteDelivery;
        return out;
      }
      value = lagrange_at_zero(points, scheme.q);
    }
    AggregateValue agg;
    agg.family = AggregationFamily::Sum;
    agg.integer_value = value;
    agg.real_value = static_cast<double>(value);
    res.per_node[v] = agg;
  }
  res.aggregate = res.per_node.begin()->second;
  for (const auto& [v, agg] : res.per_node) {
    if (agg.integer_value != res.aggregate.integer_value) {
      res.status = RoundStatus::IncompleteDelivery;
      return out;
    }
  }
  res.contributors = alive;
  res.survivors = alive;
  res.status = RoundStatus::Ok;
  return out;
}

}  // namespace

ShareRound sss_round(const Topology& topo, const SimConfig& config,
                     const std::map<NodeId, u64>& secrets, const std::map<NodeId, KeyTable>& keys,
                     u64 field_prime, u32 degree, u32 seq_no) {
  if (!is_prime(field_prime)) throw std::invalid_argument("sss: field prime required");
  if (keys.empty()) throw std::invalid_argument("sss: no participants");
  if (degree + 1 > keys.size())
    throw std::invalid_argument("sss: degree must stay below the participant count");
  std::map<NodeId, std::vector<NodeId>> recipients;
  for (const auto& [dealer, table] : keys) {
    std::vector<NodeId> rec;
    for (const auto& [peer, k] : table.pairwise)
      if (keys.count(peer)) rec.push_back(peer);
    std::sort(rec.begin(), rec.end());
    recipients[dealer] = rec;
  }
  ShareScheme scheme;
  scheme.q = field_prime;
  scheme.degree = degree;
  scheme.weighted = false;
  return run_share_protocol(topo, config, secrets, keys, recipients, scheme, seq_no);
}

std::vector<NodeId> nsss_recipients(const Topology& topo, NodeId node, u32 share_count,
                                    u32 hop_limit, const std::set<NodeId>& candidates) {
  std::set<NodeId> within = candidates;
  if (within.empty())
    for (NodeId v = 1; v <= topo.n; ++v) within.insert(v);
  const auto dist = topo.distances_from(node, within);
  std::vector<std::pair<u32, NodeId>> near;
  for (const auto& [v, d] : dist)
    if (v != node && d <= hop_limit) near.emplace_back(d, v);
  std::sort(near.begin(), near.end());
  if (near.size() < share_count) {
    std::ostringstream msg;
    msg << "nsss: node " << node << " has only " << near.size() << " neighbors within "
        << hop_limit << " hops, needs " << share_count;
    throw std::invalid_argument(msg.str());
  }
  std::vector<NodeId> rec;
  for (u32 k = 0; k < share_count; ++k) rec.push_back(near[k].second);
  std::sort(rec.begin(), rec.end());
  return rec;
}

ShareRound nsss_round(const Topology& topo, const SimConfig& config,
                      const std::map<NodeId, u64>& secrets, const std::map<NodeId, KeyTable>& keys,
                      u64 field_prime, u32 share_count, u32 hop_limit, u32 seq_no) {
  if (!is_prime(field_prime)) throw std::invalid_argument("nsss: field prime required");
  if (keys.empty()) throw std::invalid_argument("nsss: no participants");
  if (share_count < 1 || share_count >= keys.size())
    throw std::invalid_argument("nsss: share count must be in [1, n-1]");
  if (hop_limit < 1) throw std::invalid_argument("nsss: hop_limit must be >= 1");

  std::set<NodeId> participants;
  for (const auto& [v, table] : keys) participants.insert(v);
  std::ostringstream deficient;
  std::map<NodeId, std::vector<NodeId>> recipients;
  for (const auto& [dealer, table] : keys) {
    try {
      recipients[dealer] = nsss_recipients(topo, dealer, share_count, hop_limit, participants);
    } catch (const std::invalid_argument& e) {
      deficient << (deficient.tellp() > 0 ? "; " : "") << e.what();
    }
  }
  if (deficient.tellp() > 0) throw std::invalid_argument(deficient.str());

  ShareScheme scheme;
  scheme.q = field_prime;
  scheme.degree = share_count - 1;  // d points pin a degree d-1 polynomial
  scheme.hop_limit = hop_limit;
  scheme.weighted = true;
  return run_share_protocol(topo, config, secrets, keys, recipients, scheme, seq_no);
}

}  // namespace lipisim
