#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN

#include "lipisim/dfke.hpp"

#include <set>

#include "doctest.h"

using namespace lipisim;

namespace {

// Repeated-multiplication oracle, independent of mod_pow.
u64 slow_pow(u64 base, u64 exp, u64 mod) {
  u64 acc = 1 % mod;
  for (u64 i = 0; i < exp; ++i) acc = static_cast<u64>((static_cast<u128>(acc) * base) % mod);
  return acc;
}

}  // namespace

TEST_CASE("textbook exchange: p=23, g=5, d=(6,15)") {
  const ModParams params{23, 5};
  std::map<NodeId, u64> publics{{1, slow_pow(5, 6, 23)}, {2, slow_pow(5, 15, 23)}};
  CHECK(publics[1] == 8);
  CHECK(publics[2] == 19);
  const auto t1 = compute_keytable(1, 6, params, publics);
  const auto t2 = compute_keytable(2, 15, params, publics);
  CHECK(t1.public_value == 8);
  CHECK(t2.public_value == 19);
  // Pre-fold shared secret is 2 on both ends.
  CHECK(slow_pow(publics[2], 6, 23) == 2);
  CHECK(slow_pow(publics[1], 15, 23) == 2);
  CHECK(t1.pairwise.at(2) == fold_key(2));
  CHECK(t1.pairwise.at(2) == t2.pairwise.at(1));
}

TEST_CASE("table symmetry for two nodes under any parameters") {
  const ModParams params{2147483647ull, 7};
  for (u64 seed = 0; seed < 20; ++seed) {
    const u64 d1 = draw_secret_exponent(1, seed, params.p);
    const u64 d2 = draw_secret_exponent(2, seed, params.p);
    std::map<NodeId, u64> publics{{1, mod_pow(params.g, d1, params.p)},
                                  {2, mod_pow(params.g, d2, params.p)}};
    const auto t1 = compute_keytable(1, d1, params, publics);
    const auto t2 = compute_keytable(2, d2, params, publics);
    REQUIRE(t1.pairwise.at(2) == t2.pairwise.at(1));
  }
}

TEST_CASE("dfke_round: symmetric keys across the whole network, many seeds") {
  const auto topo = Topology::random_geometric_connected(10, 300.0, 100.0, 5);
  const ModParams params{2147483647ull, 7};
  SimConfig cfg;
  cfg.ntx = topo.diameter() + 1;
  for (u64 seed = 0; seed < 25; ++seed) {
    cfg.rng_seed = seed;
    const auto r = dfke_round(topo, cfg, params, 1, seed);
    REQUIRE(r.participants.size() == 10);
    for (NodeId i : r.participants) {
      for (NodeId j : r.participants) {
        if (i >= j) continue;
        REQUIRE(r.tables.at(i).pairwise.at(j) == r.tables.at(j).pairwise.at(i));
      }
    }
  }
}

TEST_CASE("dfke_round metrics cover flood and sharing phases") {
  const auto topo = Topology::complete(6);
  SimConfig cfg;
  cfg.ntx = 2;
  const auto r = dfke_round(topo, cfg, {2147483647ull, 7}, 1, 9);
  // Glossy rounds (= ntx on a complete graph) plus one chain slot.
  CHECK(r.metrics.duration == 2 + 8);
  for (NodeId v = 1; v <= 6; ++v) {
    CHECK(r.metrics.per_node.at(v).latency == r.metrics.duration);
    CHECK(r.metrics.per_node.at(v).radio_on <= r.metrics.per_node.at(v).latency);
  }
}

TEST_CASE("a node failed before the exchange is absent everywhere") {
  const auto topo = Topology::complete(5);
  SimConfig cfg;
  cfg.ntx = 2;
  cfg.failure_plan = {{3, FailurePhase::BeforeDfke, 1}};
  const auto r = dfke_round(topo, cfg, {23, 5}, 1, 4);
  CHECK(r.participants == std::set<NodeId>{1, 2, 4, 5});
  for (NodeId v : r.participants) {
    CHECK(r.tables.at(v).pairwise.count(3) == 0);
    CHECK(r.tables.at(v).pairwise.size() == 3);
  }
}

TEST_CASE("nodes the flood cannot reach are excluded and reported") {
  Topology topo;
  topo.resize(4);
  topo.add_edge(1, 2);
  topo.add_edge(2, 3);  // node 4 isolated
  SimConfig cfg;
  cfg.ntx = 2;
  const auto r = dfke_round(topo, cfg, {23, 5}, 1, 4);
  CHECK(r.participants == std::set<NodeId>{1, 2, 3});
  CHECK(r.excluded == std::set<NodeId>{4});
}

TEST_CASE("keys are non-degenerate at demo scale") {
  const auto topo = Topology::complete(16);
  SimConfig cfg;
  cfg.ntx = 2;
  const ModParams params{2147483647ull, 7};
  std::size_t pairs = 0;
  std::size_t collisions = 0;
  for (u64 seed = 100; seed < 110; ++seed) {
    cfg.rng_seed = seed;
    const auto r = dfke_round(topo, cfg, params, 1, seed);
    for (const auto& [id, table] : r.tables) {
      std::set<u64> seen;
      for (const auto& [peer, key] : table.pairwise) {
        if (!seen.insert(key).second) ++collisions;
        ++pairs;
      }
    }
  }
  CHECK(pairs >= 1000);
  CHECK(collisions == 0);
}

TEST_CASE("key_refresh_due") {
  const RefreshPolicy policy{100};
  CHECK_FALSE(key_refresh_due(0, policy));
  CHECK_FALSE(key_refresh_due(99, policy));
  CHECK(key_refresh_due(100, policy));
  CHECK(key_refresh_due(350, policy));
  CHECK(key_refresh_due(0, policy, true));
}

TEST_CASE("dfke_round validates parameters") {
  const auto topo = Topology::line(2);
  SimConfig cfg;
  CHECK_THROWS_AS(dfke_round(topo, cfg, {21, 5}, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(dfke_round(topo, cfg, {23, 1}, 1, 0), std::invalid_argument);
}
