#include "lipisim/modmath.hpp"

#include <array>
#include <stdexcept>

namespace lipisim {

u64 mul_mod(u64 a, u64 b, u64 m) {
  return static_cast<u64>((static_cast<u128>(a) * b) % m);
}

bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    if (n % p == 0) return n == p;
  }
  // Deterministic Miller-Rabin for 64-bit integers.
  u64 d = n - 1;
  unsigned r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
    u64 x = mod_pow(a % n, d, n);
    if (x == 0 || x == 1 || x == n - 1) continue;
    bool witness = true;
    for (unsigned i = 1; i < r; ++i) {
      x = mul_mod(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

u64 mod_pow(u64 base, u64 exp, u64 modulus) {
  if (modulus == 0) throw std::invalid_argument("mod_pow: modulus must be >= 1");
  if (modulus == 1) return 0;
  if (exp == 0) return 1;
  // X^Y = (X^(Y/2))^2 when Y is even, X * (X^(Y/2))^2 otherwise.
  u64 half = mod_pow(base, exp / 2, modulus);
  u64 sq = mul_mod(half, half, modulus);
  if (exp % 2 == 0) return sq;
  return mul_mod(base % modulus, sq, modulus);
}

u64 mod_inv(u64 a, u64 m) {
  if (m == 0) throw std::invalid_argument("mod_inv: modulus must be >= 1");
  a %= m;
  if (a == 0) throw std::invalid_argument("mod_inv: value has no inverse (0 mod m)");
  // Extended gcd on (a, m); signed 128-bit coefficients cover u64 inputs.
  using i128 = __int128;
  i128 old_r = a, r = m;
  i128 old_s = 1, s = 0;
  while (r != 0) {
    i128 q = old_r / r;
    i128 tmp = old_r - q * r;
    old_r = r;
    r = tmp;
    tmp = old_s - q * s;
    old_s = s;
    s = tmp;
  }
  if (old_r != 1) throw std::invalid_argument("mod_inv: value not coprime with modulus");
  i128 inv = old_s % static_cast<i128>(m);
  if (inv < 0) inv += m;
  return static_cast<u64>(inv);
}

u64 bit_reverse(u64 v, unsigned width) {
  if (width > 64) throw std::invalid_argument("bit_reverse: width must be <= 64");
  if (width < 64 && (v >> width) != 0)
    throw std::invalid_argument("bit_reverse: value exceeds the given width");
  u64 out = 0;
  for (unsigned k = 0; k < width; ++k) {
    out |= ((v >> k) & 1u) << (width - 1 - k);
  }
  return out;
}

namespace {

inline u64 avalanche64(u64 z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

}  // namespace

u64 keyed_rand(const SeedMaterial& seed) {
  // Byte layout is fixed: key big-endian, seq_no big-endian, tag.
  std::array<u8, 13> bytes{};
  for (int i = 0; i < 8; ++i) bytes[static_cast<size_t>(i)] = static_cast<u8>(seed.key >> (56 - 8 * i));
  for (int i = 0; i < 4; ++i) bytes[static_cast<size_t>(8 + i)] = static_cast<u8>(seed.seq_no >> (24 - 8 * i));
  bytes[12] = seed.tag;
  // FNV-1a absorption followed by two avalanche rounds.
  u64 state = 0xcbf29ce484222325ull;
  for (u8 b : bytes) {
    state ^= b;
    state *= 0x100000001b3ull;
  }
  return avalanche64(avalanche64(state));
}

u64 keyed_rand_range(const SeedMaterial& seed, u64 lo, u64 hi) {
  if (lo > hi) throw std::invalid_argument("keyed_rand_range: empty range");
  u64 span = hi - lo + 1;  // span == 0 means the full 2^64 range
  u64 r = keyed_rand(seed);
  return span == 0 ? r : lo + r % span;
}

std::vector<u64> distinct_prime_factors(u64 n) {
  std::vector<u64> out;
  for (u64 d = 2; static_cast<u128>(d) * d <= n; ++d) {
    if (n % d == 0) {
      out.push_back(d);
      while (n % d == 0) n /= d;
    }
  }
  if (n > 1) out.push_back(n);
  return out;
}

u64 find_generator(u64 p) {
  if (!is_prime(p)) throw std::invalid_argument("find_generator: p must be prime");
  if (p == 2) return 1;  // multiplicative group has order 1
  const u64 order = p - 1;
  const auto factors = distinct_prime_factors(order);
  for (u64 g = 2; g < p; ++g) {
    bool full_order = true;
    for (u64 q : factors) {
      if (mod_pow(g, order / q, p) == 1) {
        full_order = false;
        break;
      }
    }
    if (full_order) return g;
  }
  throw std::logic_error("find_generator: no generator found (p not prime?)");
}

u64 find_generator_mod_p2(u64 p) {
  if (!is_prime(p) || p == 2) throw std::invalid_argument("find_generator_mod_p2: p must be an odd prime");
  if (p >= (1ull << 32)) throw std::invalid_argument("find_generator_mod_p2: p^2 must fit in 64 bits");
  const u64 p2 = p * p;
  u64 g = find_generator(p);
  // A primitive root mod p lifts to one mod p^2 unless g^(p-1) == 1 mod p^2,
  // in which case g+p works.
  if (mod_pow(g, p - 1, p2) == 1) g += p;
  return g;
}

}  // namespace lipisim
