#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN

#include "lipisim/lipi.hpp"

#include <set>

#include "doctest.h"

using namespace lipisim;

namespace {

const ModParams kParams{2147483647ull, 7};

std::map<NodeId, KeyTable> exchange_keys(const Topology& topo, SimConfig cfg, u64 seed) {
  cfg.failure_plan.erase(
      std::remove_if(cfg.failure_plan.begin(), cfg.failure_plan.end(),
                     [](const FailureEvent& e) { return e.phase != FailurePhase::BeforeDfke; }),
      cfg.failure_plan.end());
  return dfke_round(topo, cfg, kParams, 1, seed).tables;
}

std::map<NodeId, u64> id_secrets(u32 n) {
  std::map<NodeId, u64> s;
  for (NodeId i = 1; i <= n; ++i) s[i] = i;
  return s;
}

// Plain-sum oracle over a chosen subset.
u64 plain_sum(const std::map<NodeId, u64>& secrets, const std::set<NodeId>& subset) {
  u64 total = 0;
  for (NodeId v : subset) total += secrets.at(v);
  return total;
}

}  // namespace

TEST_CASE("failure-free rounds recover the sum of node ids") {
  for (u32 n : {24u, 31u}) {
    const auto topo = Topology::random_geometric_connected(n, 400.0, 150.0, n);
    SimConfig cfg;
    cfg.ntx = topo.diameter() + 1;
    const auto keys = exchange_keys(topo, cfg, 3);
    const auto result = lipi_round(topo, cfg, {}, id_secrets(n), keys, 1);
    REQUIRE(result.status == RoundStatus::Ok);
    CHECK_FALSE(result.recovery_used);
    CHECK(result.aggregate.integer_value == (n == 24 ? 300 : 496));
    CHECK(result.survivors.size() == n);
    for (const auto& [v, agg] : result.per_node) CHECK(agg.integer_value == result.aggregate.integer_value);
    CHECK(result.trace.minicast_rounds() == 1);
  }
}

TEST_CASE("a silent node triggers recovery and the survivor sum") {
  const auto topo = Topology::complete(3);
  SimConfig cfg;
  cfg.ntx = 2;
  cfg.failure_plan = {{3, FailurePhase::AfterDfkeSilent, 1}};
  std::map<NodeId, u64> secrets{{1, 41}, {2, 59}, {3, 1000}};
  const auto keys = exchange_keys(topo, cfg, 7);
  const auto result = lipi_round(topo, cfg, {}, secrets, keys, 1);
  REQUIRE(result.status == RoundStatus::Ok);
  CHECK(result.recovery_used);
  CHECK(result.aggregate.integer_value == 100);
  CHECK(result.survivors == std::set<NodeId>{1, 2});
  CHECK(result.contributors == std::set<NodeId>{1, 2});
  CHECK(result.trace.missing == std::vector<NodeId>{3});
  CHECK(result.trace.minicast_rounds() == 2);
}

TEST_CASE("detect_missing") {
  const std::set<NodeId> expected{1, 2, 3, 4};
  std::vector<Entry> view{{1, 0, 10}, {2, 0, 20}, {3, 0, 30}, {4, 0, 40}};
  CHECK(detect_missing(view, expected).empty());
  view.pop_back();
  CHECK(detect_missing(view, expected) == std::set<NodeId>{4});
  CHECK(detect_missing({}, expected) == expected);
}

TEST_CASE("a mid-share failure with healthy relays needs no recovery") {
  const auto topo = Topology::line(4);
  SimConfig cfg;
  cfg.ntx = 4;
  cfg.failure_plan = {{1, FailurePhase::MidShare, 1}};
  std::map<NodeId, u64> secrets{{1, 10}, {2, 20}, {3, 30}, {4, 40}};
  const auto keys = exchange_keys(topo, cfg, 11);
  const auto result = lipi_round(topo, cfg, {}, secrets, keys, 1, 2);
  REQUIRE(result.status == RoundStatus::Ok);
  CHECK_FALSE(result.recovery_used);                       // its value survived
  CHECK(result.aggregate.integer_value == 100);            // the dead node still contributed
  CHECK(result.contributors == std::set<NodeId>{1, 2, 3, 4});
  CHECK(result.survivors == std::set<NodeId>{2, 3, 4});
}

TEST_CASE("initiator named in the failure plan aborts the round") {
  const auto topo = Topology::complete(4);
  SimConfig cfg;
  cfg.ntx = 2;
  cfg.failure_plan = {{1, FailurePhase::AfterDfkeSilent, 1}};
  const auto keys = exchange_keys(topo, cfg, 5);
  const auto result = lipi_round(topo, cfg, {}, id_secrets(4), keys, 1, 1);
  CHECK(result.status == RoundStatus::InitiatorFailed);
  CHECK(result.per_node.empty());
}

TEST_CASE("agreement and survivor correctness for random silent failure plans") {
  const u32 n = 10;
  const auto topo = Topology::complete(n);
  for (u64 trial = 0; trial < 40; ++trial) {
    SimConfig cfg;
    cfg.ntx = 3;
    cfg.rng_seed = trial;
    std::map<NodeId, u64> secrets;
    for (NodeId i = 1; i <= n; ++i)
      secrets[i] = keyed_rand({trial, i, 60}) % 1000000;
    const std::size_t failures = trial % (n - 1);  // up to n-2
    std::set<NodeId> silent;
    for (u32 attempt = 0; silent.size() < failures; ++attempt) {
      const NodeId victim = 2 + static_cast<NodeId>(keyed_rand({trial, attempt, 61}) % (n - 1));
      silent.insert(victim);
    }
    for (NodeId v : silent) cfg.failure_plan.push_back({v, FailurePhase::AfterDfkeSilent, 1});

    const auto keys = exchange_keys(topo, cfg, trial + 100);
    const auto result = lipi_round(topo, cfg, {}, secrets, keys, static_cast<u32>(trial + 1));
    REQUIRE(result.status == RoundStatus::Ok);
    CHECK(result.recovery_used == !silent.empty());
    REQUIRE(result.aggregate.integer_value == plain_sum(secrets, result.contributors));
    std::set<NodeId> expected_survivors;
    for (NodeId i = 1; i <= n; ++i)
      if (!silent.count(i)) expected_survivors.insert(i);
    CHECK(result.survivors == expected_survivors);
    for (const auto& [v, agg] : result.per_node)
      REQUIRE(agg.integer_value == result.aggregate.integer_value);
  }
}

TEST_CASE("single silent failure doubles the round cost") {
  for (u64 seed : {1ull, 2ull}) {
    const auto topo = Topology::random_geometric_connected(24, 400.0, 150.0, seed);
    SimConfig cfg;
    cfg.ntx = topo.diameter() + 1;
    const auto keys = exchange_keys(topo, cfg, seed);
    const auto secrets = id_secrets(24);

    const auto clean = lipi_round(topo, cfg, {}, secrets, keys, 1);
    REQUIRE(clean.status == RoundStatus::Ok);

    SimConfig failing = cfg;
    failing.failure_plan = {{24, FailurePhase::AfterDfkeSilent, 1}};
    const auto hurt = lipi_round(topo, failing, {}, secrets, keys, 1);
    REQUIRE(hurt.status == RoundStatus::Ok);
    REQUIRE(hurt.recovery_used);
    for (NodeId v : hurt.survivors) {
      const double ratio = static_cast<double>(hurt.metrics.per_node.at(v).latency) /
                           static_cast<double>(clean.metrics.per_node.at(v).latency);
      CAPTURE(seed);
      CAPTURE(v);
      REQUIRE(ratio >= 1.8);
      REQUIRE(ratio <= 2.2);
    }
  }
}

TEST_CASE("latency does not grow as more nodes fail beyond the first") {
  const u32 n = 24;
  const auto topo = Topology::complete(n);
  SimConfig base;
  base.ntx = 3;
  const auto keys = exchange_keys(topo, base, 9);
  const auto secrets = id_secrets(n);
  u64 previous = 0;
  for (u32 failed = 1; failed <= 8; ++failed) {
    SimConfig cfg = base;
    for (NodeId v = 0; v < failed; ++v)
      cfg.failure_plan.push_back({n - v, FailurePhase::AfterDfkeSilent, 1});
    const auto result = lipi_round(topo, cfg, {}, secrets, keys, 1);
    REQUIRE(result.status == RoundStatus::Ok);
    const u64 latency = result.metrics.per_node.at(1).latency;
    if (failed > 1) REQUIRE(latency <= previous);
    previous = latency;
  }
}

TEST_CASE("trace hygiene: no broadcast payload equals a plaintext secret") {
  const u32 n = 8;
  const auto topo = Topology::complete(n);
  SimConfig cfg;
  cfg.ntx = 2;
  cfg.failure_plan = {{5, FailurePhase::AfterDfkeSilent, 1}};
  const auto keys = exchange_keys(topo, cfg, 13);
  for (u64 trial = 0; trial < 50; ++trial) {
    std::map<NodeId, u64> secrets;
    std::set<u64> secret_values;
    for (NodeId i = 1; i <= n; ++i) {
      secrets[i] = keyed_rand({trial * 31 + i, 5, 62});
      secret_values.insert(secrets[i]);
    }
    const auto result = lipi_round(topo, cfg, {}, secrets, keys, static_cast<u32>(trial + 1));
    REQUIRE(result.status == RoundStatus::Ok);
    for (const auto& phase : result.trace.phases) {
      for (const auto& e : phase.payloads) REQUIRE(secret_values.count(e.value) == 0);
    }
  }
}

TEST_CASE("run_periodic: stable aggregate, fresh masks") {
  const auto topo = Topology::complete(5);
  SimConfig cfg;
  cfg.ntx = 2;
  PeriodicOptions opts;
  opts.num_rounds = 2;
  std::map<NodeId, u64> secrets{{1, 7}, {2, 11}, {3, 13}, {4, 17}, {5, 23}};
  const auto results = run_periodic(topo, cfg, {}, secrets, opts);
  REQUIRE(results.size() == 2);
  CHECK(results[0].aggregate.integer_value == 71);
  CHECK(results[1].aggregate.integer_value == 71);
  // Same secrets, advancing seq_no: the broadcast masks must differ.
  std::map<NodeId, u64> masks0, masks1;
  for (const auto& e : results[0].trace.phases[1].payloads) masks0[e.origin] = e.value;
  for (const auto& e : results[1].trace.phases[1].payloads) masks1[e.origin] = e.value;
  for (NodeId v = 1; v <= 5; ++v) {
    CAPTURE(v);
    REQUIRE(masks0.at(v) != masks1.at(v));
  }
}

TEST_CASE("run_periodic: refresh threshold 1 re-keys every round") {
  const auto topo = Topology::complete(4);
  SimConfig cfg;
  cfg.ntx = 2;
  PeriodicOptions every;
  every.num_rounds = 3;
  every.refresh.round_threshold = 1;
  PeriodicOptions rarely = every;
  rarely.refresh.round_threshold = 100;
  const auto secrets = id_secrets(4);
  const auto frequent = run_periodic(topo, cfg, {}, secrets, every);
  const auto sparse = run_periodic(topo, cfg, {}, secrets, rarely);
  // Round 1 pays for DFKE in both schedules; later rounds only under threshold 1.
  CHECK(frequent[1].metrics.per_node.at(1).latency > sparse[1].metrics.per_node.at(1).latency);
  CHECK(frequent[2].metrics.per_node.at(1).latency > sparse[2].metrics.per_node.at(1).latency);
  CHECK(frequent[0].metrics.per_node.at(1).latency == sparse[0].metrics.per_node.at(1).latency);
  for (const auto& r : frequent) CHECK(r.aggregate.integer_value == 10);
}

TEST_CASE("run_periodic: a joining node enters the aggregate at its round") {
  const auto topo = Topology::complete(4);
  SimConfig cfg;
  cfg.ntx = 2;
  PeriodicOptions opts;
  opts.num_rounds = 3;
  opts.joins = {{2, 4}};  // node 4 joins at round 2
  std::map<NodeId, u64> secrets{{1, 100}, {2, 200}, {3, 300}, {4, 4000}};
  const auto results = run_periodic(topo, cfg, {}, secrets, opts);
  CHECK(results[0].aggregate.integer_value == 600);
  CHECK(results[0].participants == std::set<NodeId>{1, 2, 3});
  CHECK(results[1].aggregate.integer_value == 4600);
  CHECK(results[1].participants == std::set<NodeId>{1, 2, 3, 4});
  CHECK(results[2].aggregate.integer_value == 4600);
}

TEST_CASE("GM family end to end") {
  AggregationSpec spec;
  spec.family = AggregationFamily::GeometricMean;
  const auto topo = Topology::complete(4);
  SimConfig cfg;
  cfg.ntx = 2;
  const auto keys = exchange_keys(topo, cfg, 21);
  std::map<NodeId, u64> secrets{{1, 2}, {2, 8}, {3, 4}, {4, 16}};
  const auto result = lipi_round(topo, cfg, spec, secrets, keys, 1);
  REQUIRE(result.status == RoundStatus::Ok);
  CHECK(result.aggregate.integer_value == 1024);  // 2*8*4*16
  CHECK(result.aggregate.real_value == doctest::Approx(std::pow(1024.0, 0.25)).epsilon(1e-9));
}
