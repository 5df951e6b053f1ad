#include "lipisim/aggspec.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace lipisim {

namespace {

// A nonzero residue of Z_Q drawn from the keyed stream; on a zero draw the
// tag is incremented and the draw repeated, deterministically on both ends.
u64 nonzero_field_draw(u64 key, u32 seq_no, u64 q) {
  u8 t = tag::kNoise;
  for (;;) {
    const u64 v = keyed_rand({key, seq_no, t}) % q;
    if (v != 0) return v;
    ++t;
  }
}

}  // namespace

u64 noise_for(const AggregationSpec& spec, u64 pairwise_key, u32 seq_no, NodeId self_id,
              NodeId peer_id) {
  if (self_id == peer_id) throw std::invalid_argument("noise_for: self_id must differ from peer_id");
  const bool low_side = self_id < peer_id;
  switch (spec.family) {
    case AggregationFamily::Sum: {
      const u64 r = keyed_rand({pairwise_key, seq_no, tag::kNoise});
      return low_side ? r : 0 - r;
    }
    case AggregationFamily::ArithmeticMean:
    case AggregationFamily::HarmonicMean:
    case AggregationFamily::PowerMean: {
      // Two-term form: the key stream plus the bit-reversed-key stream.
      const u64 a = keyed_rand({pairwise_key, seq_no, tag::kNoise});
      const u64 b = keyed_rand({bit_reverse(pairwise_key, 64), seq_no, tag::kNoise});
      const u64 sum = a + b;
      return low_side ? 0 - sum : sum;
    }
    case AggregationFamily::GeometricMean: {
      const u64 q = spec.gm_modulus;
      const u64 a = nonzero_field_draw(pairwise_key, seq_no, q);
      const u64 b = nonzero_field_draw(bit_reverse(pairwise_key, 64), seq_no, q);
      return low_side ? mul_mod(mod_inv(a, q), mod_inv(b, q), q) : mul_mod(a, b, q);
    }
  }
  throw std::logic_error("noise_for: unhandled family");
}

MaskedValue mask(const AggregationSpec& spec, NodeId owner, u64 secret, u32 seq_no,
                 const NoiseVector& noises) {
  MaskedValue out;
  out.owner = owner;
  out.seq_no = seq_no;
  if (spec.additive()) {
    u64 m = secret;
    for (const auto& [peer, q] : noises.per_peer) {
      if (peer == owner) throw std::invalid_argument("mask: noise vector contains the owner itself");
      m += q;
    }
    out.value = m;
  } else {
    const u64 q = spec.gm_modulus;
    u64 m = secret % q;
    if (m == 0) throw std::invalid_argument("mask: GM secret must be nonzero mod Q");
    for (const auto& [peer, noise] : noises.per_peer) {
      if (peer == owner) throw std::invalid_argument("mask: noise vector contains the owner itself");
      m = mul_mod(m, noise % q, q);
    }
    out.value = m;
  }
  return out;
}

AggregateValue demask(const AggregationSpec& spec, const std::vector<MaskedValue>& masked,
                      std::size_t participant_count) {
  if (masked.empty()) throw std::invalid_argument("demask: empty vector");
  if (masked.size() != participant_count)
    throw std::invalid_argument("demask: incomplete participant set");
  std::set<NodeId> owners;
  for (const auto& m : masked) {
    if (m.seq_no != masked.front().seq_no)
      throw std::invalid_argument("demask: mixed sequence numbers");
    if (!owners.insert(m.owner).second)
      throw std::invalid_argument("demask: duplicate owner");
  }
  AggregateValue out;
  out.family = spec.family;
  if (spec.additive()) {
    u64 total = 0;
    for (const auto& m : masked) total += m.value;
    out.integer_value = total;
    out.divisor = spec.family == AggregationFamily::Sum ? 1 : masked.size();
    if (spec.family == AggregationFamily::Sum) {
      out.real_value = static_cast<double>(total);
    } else if (spec.family == AggregationFamily::ArithmeticMean) {
      out.real_value = static_cast<double>(total) / static_cast<double>(masked.size());
    } else {
      out.real_value = qam_decode_mean(spec, total, masked.size());
    }
  } else {
    const u64 q = spec.gm_modulus;
    u64 prod = 1;
    for (const auto& m : masked) prod = mul_mod(prod, m.value % q, q);
    out.integer_value = prod;
    out.divisor = masked.size();
    out.real_value = std::pow(static_cast<double>(prod),
                              1.0 / static_cast<double>(masked.size()));
  }
  return out;
}

MaskedValue recompute_mask(const AggregationSpec& spec, NodeId owner, u64 secret, u32 seq_no,
                           const NoiseVector& noises, const std::vector<NodeId>& missing) {
  NoiseVector reduced;
  for (const auto& [peer, q] : noises.per_peer) {
    if (std::find(missing.begin(), missing.end(), peer) == missing.end())
      reduced.per_peer.emplace(peer, q);
  }
  return mask(spec, owner, secret, seq_no, reduced);
}

double qam_forward(const AggregationSpec& spec, double x) {
  switch (spec.family) {
    case AggregationFamily::Sum:
    case AggregationFamily::ArithmeticMean:
      return x;
    case AggregationFamily::GeometricMean:
      if (x <= 0.0) throw std::invalid_argument("qam_forward: log transform needs x > 0");
      return std::log(x);
    case AggregationFamily::HarmonicMean:
      if (x == 0.0) throw std::invalid_argument("qam_forward: reciprocal transform needs x != 0");
      return 1.0 / x;
    case AggregationFamily::PowerMean:
      if (x < 0.0 && spec.power_exponent != std::floor(spec.power_exponent))
        throw std::invalid_argument("qam_forward: fractional power needs x >= 0");
      return std::pow(x, spec.power_exponent);
  }
  throw std::logic_error("qam_forward: unhandled family");
}

double qam_inverse(const AggregationSpec& spec, double y) {
  switch (spec.family) {
    case AggregationFamily::Sum:
    case AggregationFamily::ArithmeticMean:
      return y;
    case AggregationFamily::GeometricMean:
      return std::exp(y);
    case AggregationFamily::HarmonicMean:
      if (y == 0.0) throw std::invalid_argument("qam_inverse: y must be nonzero");
      return 1.0 / y;
    case AggregationFamily::PowerMean:
      if (y < 0.0 && spec.power_exponent != std::floor(spec.power_exponent))
        throw std::invalid_argument("qam_inverse: negative mean under fractional power");
      return std::pow(y, 1.0 / spec.power_exponent);
  }
  throw std::logic_error("qam_inverse: unhandled family");
}

double qam_mean(const AggregationSpec& spec, const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("qam_mean: empty input");
  double acc = 0.0;
  for (double v : values) acc += qam_forward(spec, v);
  return qam_inverse(spec, acc / static_cast<double>(values.size()));
}

namespace {
constexpr double kQamScale = 4294967296.0;  // 2^32 fixed-point scale
}

u64 qam_encode(const AggregationSpec& spec, double x) {
  const double y = qam_forward(spec, x) * kQamScale;
  if (std::abs(y) >= 9.0e18) throw std::invalid_argument("qam_encode: transformed value too large");
  const long long scaled = std::llround(y);
  return static_cast<u64>(scaled);  // two's complement wrap carries the sign
}

double qam_decode_mean(const AggregationSpec& spec, u64 wrapped_sum, std::size_t n) {
  if (n == 0) throw std::invalid_argument("qam_decode_mean: n must be positive");
  const double total = static_cast<double>(static_cast<std::int64_t>(wrapped_sum));
  return qam_inverse(spec, total / kQamScale / static_cast<double>(n));
}

NoiseVector noises_against(const AggregationSpec& spec,
                           const std::map<NodeId, u64>& pairwise_keys, u32 seq_no,
                           NodeId self_id) {
  NoiseVector out;
  for (const auto& [peer, key] : pairwise_keys) {
    if (peer == self_id) continue;
    out.per_peer.emplace(peer, noise_for(spec, key, seq_no, self_id, peer));
  }
  return out;
}

}  // namespace lipisim
