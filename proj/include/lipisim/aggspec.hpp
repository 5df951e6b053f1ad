#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "lipisim/modmath.hpp"

namespace lipisim {

enum class AggregationFamily { Sum, ArithmeticMean, GeometricMean, HarmonicMean, PowerMean };

/// One aggregation family plus its parameters. Additive families (Sum, AM
/// and the quasi-arithmetic means, which ride on AM after a g-transform)
/// mask in wrapping 64-bit arithmetic; GM masks multiplicatively in the
/// prime field Z_Q.
struct AggregationSpec {
  AggregationFamily family = AggregationFamily::Sum;
  u64 gm_modulus = 2305843009213693951ull;  // 2^61 - 1, prime
  double power_exponent = 2.0;              // PowerMean only

  bool additive() const {
    return family != AggregationFamily::GeometricMean;
  }
  bool quasi_arithmetic() const {
    return family == AggregationFamily::HarmonicMean || family == AggregationFamily::PowerMean;
  }
};

/// Per-peer noise contributions of one node for one round.
/// Additive families: q_ij + q_ji == 0 (mod 2^64) for every pair.
/// GM: q_ij * q_ji == 1 (mod Q).
struct NoiseVector {
  std::map<NodeId, u64> per_peer;
};

struct MaskedValue {
  NodeId owner = 0;
  u64 value = 0;
  u32 seq_no = 0;
};

/// De-masked aggregate. integer_value holds the exact wrapped sum (Sum,
/// AM numerator) or the lifted field product (GM); real_value holds the
/// family's final real-valued answer where one exists.
struct AggregateValue {
  AggregationFamily family = AggregationFamily::Sum;
  u64 integer_value = 0;
  u64 divisor = 1;
  double real_value = 0.0;
};

/// Noise element shared by the (self, peer) pair for this round. Both
/// endpoints derive the same stream values from the pairwise key; the
/// side with the smaller id takes one orientation, the other side the
/// canceling orientation.
u64 noise_for(const AggregationSpec& spec, u64 pairwise_key, u32 seq_no, NodeId self_id,
              NodeId peer_id);

/// M_i = f1(S_i, q_i*): wrapped sum of secret and noises (additive) or
/// field product (GM). An empty noise vector returns the bare secret.
MaskedValue mask(const AggregationSpec& spec, NodeId owner, u64 secret, u32 seq_no,
                 const NoiseVector& noises);

/// f2 over the complete vector of masked values. Requires one value per
/// participant, all with the same seq_no.
AggregateValue demask(const AggregationSpec& spec, const std::vector<MaskedValue>& masked,
                      std::size_t participant_count);

/// Identical to mask() over the peer set minus `missing` (recovery path).
MaskedValue recompute_mask(const AggregationSpec& spec, NodeId owner, u64 secret, u32 seq_no,
                           const NoiseVector& noises, const std::vector<NodeId>& missing);

/// g-transform of the quasi-arithmetic-mean family and its inverse.
/// Sum/AM: identity; GM: log/exp; harmonic: reciprocal; power: x^e.
double qam_forward(const AggregationSpec& spec, double x);
double qam_inverse(const AggregationSpec& spec, double y);

/// g-mean of a list of reals: g^-1 of the arithmetic mean of g(x_k).
double qam_mean(const AggregationSpec& spec, const std::vector<double>& values);

/// Fixed-point encoding used when a quasi-arithmetic mean rides on the
/// additive masking path: g(x) scaled by 2^32, rounded to nearest.
u64 qam_encode(const AggregationSpec& spec, double x);
double qam_decode_mean(const AggregationSpec& spec, u64 wrapped_sum, std::size_t n);

/// Builds the full noise vector of one node against an id-ordered peer
/// list (convenience wrapper over noise_for).
NoiseVector noises_against(const AggregationSpec& spec,
                           const std::map<NodeId, u64>& pairwise_keys, u32 seq_no,
                           NodeId self_id);

}  // namespace lipisim
