#pragma once

#include <cstdint>
#include <vector>

namespace lipisim {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using u128 = unsigned __int128;

using NodeId = u32;

/// Diffie-Hellman group parameters: an odd prime p and a generator g of
/// the full multiplicative group mod p.
struct ModParams {
  u64 p = 0;
  u64 g = 0;
};

/// Seed for the deterministic 64-bit mixer. The mixing byte layout is
/// fixed: big-endian key bytes, then big-endian seq_no bytes, then the
/// tag byte. Both endpoints of a pair must build identical SeedMaterial
/// to obtain identical stream values.
struct SeedMaterial {
  u64 key = 0;
  u32 seq_no = 0;
  u8 tag = 0;
};

// Tag registry: domain separators for every keyed_rand consumer. A new
// stream gets a new tag; never reuse one across purposes.
namespace tag {
inline constexpr u8 kNoise = 0;        // pairwise masking noise (primary stream)
inline constexpr u8 kKeyFold = 0xF0;   // folding a raw DH key to 64 bits
inline constexpr u8 kDfkeSecret = 0xD1; // drawing the per-node DH exponent
inline constexpr u8 kLinkDraw = 0xA0;  // per-(slot,subslot,edge) reception draws
inline constexpr u8 kTopology = 0xA7;  // node placement in generated topologies
inline constexpr u8 kSecrets = 0xB0;   // harness-generated secret values
inline constexpr u8 kPolyCoeff = 0xC0; // secret-sharing polynomial coefficients
inline constexpr u8 kKeystream = 0xC8; // XOR keystream for encrypted shares
inline constexpr u8 kRingExp = 0xE0;   // per-round ring exponents (PPMP)
}  // namespace tag

bool is_prime(u64 n);

/// base^exp mod modulus in O(log exp) multiplications via the
/// square-and-multiply recursion on even/odd exponents.
/// Throws std::invalid_argument when modulus == 0.
u64 mod_pow(u64 base, u64 exp, u64 modulus);

/// Multiplicative inverse of a modulo m (extended gcd). Works for any
/// modulus as long as gcd(a, m) == 1; throws std::invalid_argument
/// otherwise. For prime m this inverts every nonzero residue.
u64 mod_inv(u64 a, u64 m);

u64 mul_mod(u64 a, u64 b, u64 m);

/// Reverses the low `width` bits of v: bit k of the result equals bit
/// (width-1-k) of v. Throws std::invalid_argument if v >= 2^width.
u64 bit_reverse(u64 v, unsigned width);

/// Deterministic 64-bit mixer over the fixed SeedMaterial byte layout.
/// Identical inputs yield identical outputs on every node and every
/// platform. See docs/determinism.md for the pinned construction.
u64 keyed_rand(const SeedMaterial& seed);

/// Uniform draw from [lo, hi] derived from keyed_rand (hi inclusive).
u64 keyed_rand_range(const SeedMaterial& seed, u64 lo, u64 hi);

/// Smallest g whose multiplicative order mod p is p-1. Demo scale:
/// p <= 2^31. Throws std::invalid_argument if p is not prime.
u64 find_generator(u64 p);

/// Smallest generator of the multiplicative group mod p^2 (cyclic of
/// order p(p-1) for an odd prime p). Used by the ring-masking baseline.
u64 find_generator_mod_p2(u64 p);

/// Prime factorization by trial division; n <= ~2^62 at sane runtimes
/// only when n's second-largest factor is small. Used on p-1 at demo
/// sizes. Returns distinct prime factors.
std::vector<u64> distinct_prime_factors(u64 n);

}  // namespace lipisim
