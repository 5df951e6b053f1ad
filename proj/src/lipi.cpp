#include "lipisim/lipi.hpp"

#include <algorithm>
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

bool same_value(const AggregateValue& a, const AggregateValue& b) {
  return a.family == b.family && a.integer_value == b.integer_value && a.divisor == b.divisor &&
         a.real_value == b.real_value;
}

// Demasks every survivor's view; returns false when views disagree or
// are incomplete with respect to `contributors`.
bool demask_all(const AggregationSpec& spec, const NetMetrics& share,
                const std::set<NodeId>& survivors, const std::set<NodeId>& contributors,
                u32 seq_no, AggregateResult& out) {
  bool ok = true;
  for (NodeId v : survivors) {
    const auto it = share.delivered.find(v);
    std::vector<MaskedValue> vec;
    if (it != share.delivered.end()) {
      for (const auto& e : it->second)
        if (contributors.count(e.origin)) vec.push_back({e.origin, e.value, seq_no});
    }
    if (vec.size() != contributors.size()) {
      ok = false;
      continue;
    }
    out.per_node[v] = demask(spec, vec, contributors.size());
  }
  if (!ok || out.per_node.empty()) return false;
  const auto& first = out.per_node.begin()->second;
  for (const auto& [v, agg] : out.per_node)
    if (!same_value(agg, first)) return false;
  out.aggregate = first;
  return true;
}

}  // namespace

const char* to_string(RoundPhase phase) {
  switch (phase) {
    case RoundPhase::SyncFlood: return "sync_flood";
    case RoundPhase::Share1: return "share_1";
    case RoundPhase::MissingFlood: return "missing_flood";
    case RoundPhase::Share2Recovery: return "share_2_recovery";
    case RoundPhase::Done: return "done";
  }
  return "?";
}

const char* to_string(RoundStatus status) {
  switch (status) {
    case RoundStatus::Ok: return "ok";
    case RoundStatus::InitiatorFailed: return "initiator_failed";
    case RoundStatus::IncompleteDelivery: return "incomplete_delivery";
    case RoundStatus::RecoveryFailed: return "recovery_failed";
  }
  return "?";
}

u32 RoundTrace::minicast_rounds() const {
  u32 count = 0;
  for (const auto& p : phases)
    if (p.kind == "minicast") ++count;
  return count;
}

std::set<NodeId> detect_missing(const std::vector<Entry>& initiator_view,
                                const std::set<NodeId>& expected) {
  std::set<NodeId> present;
  for (const auto& e : initiator_view) present.insert(e.origin);
  std::set<NodeId> missing;
  for (NodeId v : expected)
    if (!present.count(v)) missing.insert(v);
  return missing;
}

AggregateResult lipi_round(const Topology& topo, const SimConfig& config,
                           const AggregationSpec& spec, const std::map<NodeId, u64>& secrets,
                           const std::map<NodeId, KeyTable>& keys, u32 seq_no,
                           NodeId initiator) {
  if (keys.empty()) throw std::invalid_argument("lipi_round: no participants");
  AggregateResult out;
  out.seq_no = seq_no;
  out.trace.seq_no = seq_no;
  for (const auto& [id, table] : keys) {
    out.participants.insert(id);
    out.trace.participants.push_back(id);
  }
  if (initiator == 0) initiator = *out.participants.begin();
  if (!out.participants.count(initiator))
    throw std::invalid_argument("lipi_round: initiator has no keys");
  for (const auto& [id, table] : keys) {
    if (!secrets.count(id)) throw std::invalid_argument("lipi_round: missing secret for a participant");
    for (NodeId peer : out.participants)
      if (peer != id && !table.pairwise.count(peer))
        throw std::invalid_argument("lipi_round: pairwise key missing");
  }

  // The round cannot run without its initiator.
  for (const auto& ev : config.failure_plan) {
    if (ev.node == initiator) {
      out.status = RoundStatus::InitiatorFailed;
      return out;
    }
  }

  const auto sync_failures = failures_for_sync(config);
  auto share_failures = failures_for_share(config);

  // Phase 1: synchronization flood carrying the participant list + seq_no.
  const auto sync = glossy_flood(topo, config, sync_failures, initiator, seq_no, seq_no * 8 + 0);
  out.metrics.accumulate(sync);
  out.trace.phases.push_back(record_phase(RoundPhase::SyncFlood, "glossy", sync));

  // Alive participants that never heard the sync stay out of this round.
  std::set<NodeId> synced;
  for (const auto& [v, e] : sync.delivered)
    if (out.participants.count(v)) synced.insert(v);
  for (NodeId v : out.participants)
    if (!synced.count(v)) share_failures.dead.insert(v);

  // Local masking over the full expected peer set.
  std::map<NodeId, std::vector<u64>> entries;
  for (NodeId v : out.participants) {
    if (share_failures.dead.count(v)) {
      entries[v] = {0};  // silent node: the slot exists, nothing is sent
      continue;
    }
    std::map<NodeId, u64> peer_keys;
    for (NodeId peer : out.participants)
      if (peer != v) peer_keys[peer] = keys.at(v).pairwise.at(peer);
    const auto nv = noises_against(spec, peer_keys, seq_no, v);
    entries[v] = {mask(spec, v, secrets.at(v), seq_no, nv).value};
  }

  // Phase 2: all-to-all share of the masked values.
  const auto share1 =
      minicast_round(topo, config, share_failures, entries, 0, seq_no * 8 + 1);
  out.metrics.accumulate(share1);
  out.trace.phases.push_back(record_phase(RoundPhase::Share1, "minicast", share1));
  out.trace.share_view = share1.delivered;

  // Mid-share nodes that actually ran out of life during share 1.
  std::set<NodeId> died;
  for (const auto& [v, k] : share_failures.mid_share)
    if (share1.slots >= k) died.insert(v);

  std::set<NodeId> alive;
  for (NodeId v : out.participants)
    if (!share_failures.dead.count(v) && !died.count(v)) alive.insert(v);

  const auto initiator_view = share1.delivered.count(initiator)
                                  ? share1.delivered.at(initiator)
                                  : std::vector<Entry>{};
  const auto missing = detect_missing(initiator_view, out.participants);

  if (missing.empty()) {
    out.contributors = out.participants;
    out.survivors = alive;
    const bool ok = demask_all(spec, share1, out.survivors, out.contributors, seq_no, out);
    out.status = ok ? RoundStatus::Ok : RoundStatus::IncompleteDelivery;
    return out;
  }

  // Phase 3: the initiator floods the final list of absentees.
  out.recovery_used = true;
  out.trace.missing.assign(missing.begin(), missing.end());
  PhaseFailures flood_failures;
  for (NodeId v = 1; v <= topo.n; ++v)
    if (out.participants.count(v) && !alive.count(v)) flood_failures.dead.insert(v);
  u64 missing_token = 0;
  for (NodeId v : missing) missing_token = missing_token * 131 + v;
  const auto mflood =
      glossy_flood(topo, config, flood_failures, initiator, missing_token, seq_no * 8 + 2);
  out.metrics.accumulate(mflood);
  out.trace.phases.push_back(record_phase(RoundPhase::MissingFlood, "glossy", mflood));

  // Recovery share: every node named by the flooded list recomputes its
  // mask without the absentees and shares again.
  std::set<NodeId> recovery_set;
  for (NodeId v : out.participants)
    if (!missing.count(v)) recovery_set.insert(v);

  std::map<NodeId, std::vector<u64>> entries2;
  const std::vector<NodeId> missing_list(missing.begin(), missing.end());
  for (NodeId v : recovery_set) {
    if (!alive.count(v)) {
      entries2[v] = {0};  // expected by the list but already gone
      continue;
    }
    std::map<NodeId, u64> peer_keys;
    for (NodeId peer : out.participants)
      if (peer != v) peer_keys[peer] = keys.at(v).pairwise.at(peer);
    const auto nv = noises_against(spec, peer_keys, seq_no, v);
    entries2[v] = {
        recompute_mask(spec, v, secrets.at(v), seq_no, nv, missing_list).value};
  }

  PhaseFailures share2_failures = flood_failures;
  for (const auto& [v, k] : share_failures.mid_share)
    if (!died.count(v) && recovery_set.count(v))
      share2_failures.mid_share[v] = k - share1.slots;  // remaining life
  const auto share2 =
      minicast_round(topo, config, share2_failures, entries2, 0, seq_no * 8 + 3);
  out.metrics.accumulate(share2);
  out.trace.phases.push_back(record_phase(RoundPhase::Share2Recovery, "minicast", share2));
  for (const auto& [v, got] : share2.delivered) out.trace.share_view[v] = got;

  std::set<NodeId> recovery_survivors;
  for (NodeId v : alive)
    if (recovery_set.count(v)) recovery_survivors.insert(v);

  // No third round: if the recovery share itself is short, the round
  // aborts with an explicit status.
  const auto view2 = share2.delivered.count(initiator) ? share2.delivered.at(initiator)
                                                       : std::vector<Entry>{};
  if (!detect_missing(view2, recovery_set).empty()) {
    out.status = RoundStatus::RecoveryFailed;
    out.survivors = recovery_survivors;
    return out;
  }

  out.contributors = recovery_set;
  out.survivors = recovery_survivors;
  const bool ok = demask_all(spec, share2, out.survivors, out.contributors, seq_no, out);
  out.status = ok ? RoundStatus::Ok : RoundStatus::IncompleteDelivery;
  return out;
}

std::vector<AggregateResult> run_periodic(const Topology& topo, const SimConfig& config,
                                          const AggregationSpec& spec,
                                          const std::map<NodeId, u64>& secrets,
                                          const PeriodicOptions& options) {
  if (options.num_rounds < 1) throw std::invalid_argument("run_periodic: num_rounds >= 1");
  std::set<NodeId> pending;  // joiners waiting for their round
  for (const auto& j : options.joins) {
    if (j.node < 1 || j.node > topo.n) throw std::invalid_argument("run_periodic: join node not in topology");
    pending.insert(j.node);
  }

  std::vector<AggregateResult> results;
  std::map<NodeId, KeyTable> keys;
  u32 rounds_since_refresh = 0;
  for (u32 round = 1; round <= options.num_rounds; ++round) {
    bool membership_changed = false;
    for (const auto& j : options.joins) {
      if (j.round == round && pending.count(j.node)) {
        pending.erase(j.node);
        membership_changed = true;
      }
    }

    SimConfig round_config = config;
    for (NodeId v : pending)
      round_config.failure_plan.push_back({v, FailurePhase::BeforeDfke, 1});

    NetMetrics dfke_metrics;
    if (keys.empty() || key_refresh_due(rounds_since_refresh, options.refresh, membership_changed)) {
      const auto ex = dfke_round(topo, round_config, options.params,
                                 options.initiator ? options.initiator : 1,
                                 options.dfke_seed + round, round * 64);
      keys = ex.tables;
      dfke_metrics = ex.metrics;
      rounds_since_refresh = 0;
    }

    auto result = lipi_round(topo, round_config, spec, secrets, keys, round, options.initiator);
    result.metrics.accumulate(dfke_metrics);
    results.push_back(std::move(result));
    ++rounds_since_refresh;
  }
  return results;
}

}  // namespace lipisim
