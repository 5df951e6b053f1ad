#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN

#include "lipisim/baselines.hpp"

#include <stdexcept>

#include "doctest.h"

using namespace lipisim;

namespace {

const ModParams kDh{2147483647ull, 7};

std::map<NodeId, KeyTable> exchange_keys(const Topology& topo, const SimConfig& cfg, u64 seed) {
  return dfke_round(topo, cfg, kDh, 1, seed).tables;
}

// Independent polynomial evaluation oracle (plain Horner over u128).
u64 eval_oracle(const std::vector<u64>& coeffs, u64 y, u64 q) {
  u128 acc = 0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = (acc * y + *it) % q;
  return static_cast<u64>(acc);
}

}  // namespace

TEST_CASE("ppmp: forced unit masks expose the textbook product") {
  const auto topo = Topology::complete(3);
  SimConfig cfg;
  cfg.ntx = 2;
  std::map<NodeId, u64> secrets{{1, 2}, {2, 3}, {3, 4}};
  std::map<NodeId, u64> zero{{1, 0}, {2, 0}, {3, 0}};
  PpmpParams params;
  params.p_enc = 101;
  const auto round = ppmp_round(topo, cfg, secrets, 1, 1, params, std::nullopt, &zero);
  REQUIRE(round.result.status == RoundStatus::Ok);
  u64 prod = 1;
  for (const auto& [v, c] : round.cipher_broadcast) prod = mul_mod(c, prod, 101 * 101);
  CHECK(prod == 910);  // 1 + 9 * 101
  CHECK(round.result.aggregate.integer_value == 9);
}

TEST_CASE("ppmp: ring ratios telescope to one") {
  for (u32 n = 3; n <= 16; ++n) {
    const auto topo = Topology::complete(n);
    SimConfig cfg;
    cfg.ntx = 2;
    std::map<NodeId, u64> secrets;
    for (NodeId i = 1; i <= n; ++i) secrets[i] = i;
    for (u64 seed = 0; seed < 15; ++seed) {
      const auto round = ppmp_round(topo, cfg, secrets, seed, 1);
      REQUIRE(round.result.status == RoundStatus::Ok);
      const u64 p2 = round.params.modulus();
      u64 prod = 1;
      for (const auto& [v, c] : round.cipher_broadcast) {
        // Strip the (1 + x p) factor to isolate R_v.
        const u64 masked = mul_mod(
            c, mod_inv((1 + mul_mod(secrets[v], round.params.p_enc, p2)) % p2, p2), p2);
        prod = mul_mod(prod, masked, p2);
      }
      REQUIRE(prod == 1);
    }
  }
}

TEST_CASE("ppmp: random rings recover the plain sum") {
  for (u64 seed = 0; seed < 30; ++seed) {
    const u32 n = 3 + seed % 6;
    const auto topo = Topology::random_geometric_connected(n, 250.0, 120.0, seed + 1);
    SimConfig cfg;
    cfg.ntx = topo.diameter() + 1;
    std::map<NodeId, u64> secrets;
    u64 expected = 0;
    for (NodeId i = 1; i <= n; ++i) {
      secrets[i] = keyed_rand({seed, i, 70}) % 100000;
      expected += secrets[i];
    }
    const auto round = ppmp_round(topo, cfg, secrets, seed, 1);
    REQUIRE(round.result.status == RoundStatus::Ok);
    CHECK_FALSE(round.overflow);
    REQUIRE(round.result.aggregate.integer_value == expected);
    CHECK(round.result.trace.minicast_rounds() == 2);
  }
}

TEST_CASE("ppmp: sums at or above p_enc are flagged") {
  const auto topo = Topology::complete(3);
  SimConfig cfg;
  cfg.ntx = 2;
  PpmpParams params;
  params.p_enc = 101;
  std::map<NodeId, u64> secrets{{1, 50}, {2, 40}, {3, 20}};  // 110 > 101
  const auto round = ppmp_round(topo, cfg, secrets, 3, 1, params);
  CHECK(round.overflow);
  CHECK(round.result.aggregate.integer_value != 110);  // wrapped, hence flagged
}

TEST_CASE("lagrange_at_zero") {
  CHECK(lagrange_at_zero({{1, 42}}, 97) == 42);  // constant fit
  // f(x) = 3 + 2x over F_97 at y = 1, 2.
  CHECK(lagrange_at_zero({{1, 5}, {2, 7}}, 97) == 3);
  // Overdetermined consistency: extra points of the same polynomial.
  const std::vector<u64> poly{17, 5, 9};  // degree 2
  std::vector<std::pair<u64, u64>> pts;
  for (u64 y = 1; y <= 4; ++y) pts.emplace_back(y, eval_oracle(poly, y, 97));
  CHECK(lagrange_at_zero({pts.begin(), pts.begin() + 3}, 97) == 17);
  CHECK(lagrange_at_zero(pts, 97) == 17);
  CHECK_THROWS_AS(lagrange_at_zero({{1, 5}, {1, 7}}, 97), std::invalid_argument);
  CHECK_THROWS_AS(lagrange_at_zero({{0, 5}}, 97), std::invalid_argument);
}

TEST_CASE("share keystream: decrypting with the wrong key garbles the value") {
  int hits = 0;
  for (u64 trial = 0; trial < 200; ++trial) {
    const u64 key = keyed_rand({trial, 0, 71});
    const u64 wrong = keyed_rand({trial, 1, 71});
    const u64 plain = keyed_rand({trial, 2, 71}) % 97;
    const u64 cipher = share_encrypt(plain, key, 5);
    CHECK(share_decrypt(cipher, key, 5) == plain);
    if (share_decrypt(cipher, wrong, 5) == plain) ++hits;
  }
  CHECK(hits == 0);
}

TEST_CASE("sss: three dealers, degree one, field 97") {
  const auto topo = Topology::complete(3);
  SimConfig cfg;
  cfg.ntx = 2;
  const auto keys = exchange_keys(topo, cfg, 2);
  std::map<NodeId, u64> secrets{{1, 2}, {2, 3}, {3, 4}};
  const auto round = sss_round(topo, cfg, secrets, keys, 97, 1, 1);
  REQUIRE(round.result.status == RoundStatus::Ok);
  CHECK(round.result.aggregate.integer_value == 9);
  CHECK(round.result.trace.minicast_rounds() == 2);

  // Column oracle: K_j must equal the direct sum of every dealer's
  // polynomial at j, and interpolating the K points gives the sum.
  std::vector<std::pair<u64, u64>> points;
  for (NodeId j = 1; j <= 3; ++j) {
    u64 expected = 0;
    for (NodeId dealer = 1; dealer <= 3; ++dealer)
      expected = (expected + eval_oracle(round.coefficients.at(dealer), j, 97)) % 97;
    REQUIRE(round.k_values.at(j) == expected);
    points.emplace_back(j, expected);
  }
  CHECK(lagrange_at_zero({points.begin(), points.begin() + 2}, 97) == 9);
}

TEST_CASE("sss: degenerate constant polynomials, identical K everywhere") {
  const auto topo = Topology::complete(4);
  SimConfig cfg;
  cfg.ntx = 2;
  const auto keys = exchange_keys(topo, cfg, 5);
  std::map<NodeId, u64> secrets{{1, 10}, {2, 11}, {3, 12}, {4, 13}};
  const auto round = sss_round(topo, cfg, secrets, keys, 997, 0, 1);
  REQUIRE(round.result.status == RoundStatus::Ok);
  CHECK(round.result.aggregate.integer_value == 46);
  const u64 first = round.k_values.begin()->second;
  for (const auto& [j, k] : round.k_values) CHECK(k == first);
}

TEST_CASE("sss: random configurations recover the plain sum") {
  const u64 q = 2305843009213693951ull;
  for (u64 seed = 0; seed < 25; ++seed) {
    const u32 n = 3 + seed % 8;
    const auto topo = Topology::random_geometric_connected(n, 250.0, 120.0, seed + 40);
    SimConfig cfg;
    cfg.ntx = topo.diameter() + 1;
    cfg.rng_seed = seed;
    const auto keys = exchange_keys(topo, cfg, seed);
    std::map<NodeId, u64> secrets;
    u64 expected = 0;
    for (NodeId i = 1; i <= n; ++i) {
      secrets[i] = keyed_rand({seed, i, 72}) % 1000000;
      expected += secrets[i];
    }
    const u32 degree = static_cast<u32>(seed % n);  // 0 .. n-1
    const auto round = sss_round(topo, cfg, secrets, keys, q, degree, static_cast<u32>(seed + 1));
    REQUIRE(round.result.status == RoundStatus::Ok);
    REQUIRE(round.result.aggregate.integer_value == expected);
  }
}

TEST_CASE("nsss: ring of 8, two hops, four shares") {
  const auto topo = Topology::ring(8);
  SimConfig cfg;
  cfg.ntx = 5;
  const auto keys = exchange_keys(topo, cfg, 6);
  CHECK(nsss_recipients(topo, 1, 4, 2) == std::vector<NodeId>{2, 3, 7, 8});
  std::map<NodeId, u64> secrets;
  u64 expected = 0;
  for (NodeId i = 1; i <= 8; ++i) {
    secrets[i] = 100 + i * i;
    expected += secrets[i];
  }
  const auto round = nsss_round(topo, cfg, secrets, keys, 10007, 4, 2, 1);
  REQUIRE(round.result.status == RoundStatus::Ok);
  CHECK(round.result.aggregate.integer_value == expected);
  CHECK(round.degree == 3);
  CHECK(round.result.trace.minicast_rounds() == 2);
}

TEST_CASE("nsss: deficient neighborhoods are reported up front") {
  const auto topo = Topology::line(5);
  SimConfig cfg;
  cfg.ntx = 5;
  const auto keys = exchange_keys(topo, cfg, 7);
  std::map<NodeId, u64> secrets;
  for (NodeId i = 1; i <= 5; ++i) secrets[i] = i;
  CHECK_THROWS_WITH_AS(nsss_round(topo, cfg, secrets, keys, 97, 4, 1, 1),
                       doctest::Contains("needs 4"), std::invalid_argument);
  CHECK_THROWS_AS(nsss_recipients(topo, 1, 5, 1), std::invalid_argument);
}

TEST_CASE("nsss degenerates to sss at full degree and outreach") {
  const auto topo = Topology::random_geometric_connected(6, 200.0, 120.0, 3);
  SimConfig cfg;
  cfg.ntx = topo.diameter() + 2;
  const auto keys = exchange_keys(topo, cfg, 8);
  std::map<NodeId, u64> secrets;
  for (NodeId i = 1; i <= 6; ++i) secrets[i] = 1000 + 7 * i;
  const auto full = sss_round(topo, cfg, secrets, keys, 100003, 5, 1);
  const auto local = nsss_round(topo, cfg, secrets, keys, 100003, 5, topo.diameter(), 1);
  REQUIRE(full.result.status == RoundStatus::Ok);
  REQUIRE(local.result.status == RoundStatus::Ok);
  CHECK(full.result.aggregate.integer_value == local.result.aggregate.integer_value);
}

TEST_CASE("nsss: random configurations recover the plain sum") {
  for (u64 seed = 0; seed < 20; ++seed) {
    const auto topo = Topology::random_geometric_connected(10, 250.0, 130.0, seed + 70);
    SimConfig cfg;
    cfg.ntx = topo.diameter() + 2;
    cfg.rng_seed = seed;
    const auto keys = exchange_keys(topo, cfg, seed);
    std::map<NodeId, u64> secrets;
    u64 expected = 0;
    for (NodeId i = 1; i <= 10; ++i) {
      secrets[i] = keyed_rand({seed, i, 73}) % 50000;
      expected += secrets[i];
    }
    const u32 d = 2 + seed % 2;
    const auto round =
        nsss_round(topo, cfg, secrets, keys, 2305843009213693951ull, d, 2, static_cast<u32>(seed + 1));
    REQUIRE(round.result.status == RoundStatus::Ok);
    REQUIRE(round.result.aggregate.integer_value == expected);
  }
}
