#pragma once

#include <cstdint>

namespace rrl {

/// Deterministic, splittable random stream.
///
/// The core generator is xoshiro256++ seeded through SplitMix64. All
/// distributions are implemented here rather than with <random> so that a
/// stream of draws depends only on the seed, never on the standard library
/// in use. Experiments derive one stream per replication (and further
/// substreams per concern) from a single master seed, which is what makes
/// multi-threaded runs reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform();
  double uniform(double lo, double hi);

  /// Uniform on {0, ..., n-1}; unbiased (rejection sampling). n must be > 0.
  int uniform_int(int n);

  /// Standard normal via the Marsaglia polar method.
  double normal();

  /// Exponential with the given rate, sampled by inverse CDF.
  double exponential(double rate);

  /// -1 or +1 with equal probability.
  double rademacher();

  /// Independent stream addressed by (this stream's seed, id). Derivation is
  /// hierarchical: children of distinct ids, and grandchildren along distinct
  /// paths, are statistically independent streams.
  Rng derive(std::uint64_t id) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_[4];
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace rrl
