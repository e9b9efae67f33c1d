#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>

namespace vaemir {

// Seeded pseudo-random source. The engine is std::mt19937_64, whose output
// sequence is fixed by the standard; uniform and normal variates are derived
// here rather than through <random> distributions, which are
// implementation-defined. Identical seeds therefore give identical draws on
// every conforming platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);

  // Standard normal via the Marsaglia polar method.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform integer in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a parent seed with a stream id (splitmix64 finalizer) so independent
// components (per bag, per experiment cell) get decorrelated substreams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// Fisher-Yates shuffle driven by `rng`.
void shuffle(std::span<std::size_t> values, Rng& rng);

}  // namespace vaemir
