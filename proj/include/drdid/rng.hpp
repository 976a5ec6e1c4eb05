#pragma once

#include <array>
#include <cstdint>

namespace drdid {

// Deterministic generator used everywhere randomness is needed. Streams are
// keyed by (seed, index) so replication r always sees the same draws no
// matter how reps are scheduled across threads. Algorithm: splitmix64 state
// expansion feeding xoshiro256++, normals via the Marsaglia polar method.
inline constexpr const char* kRngAlgorithm = "splitmix64+xoshiro256++";

class Rng {
 public:
  explicit Rng(std::uint64_t seed) { reseed(seed); }

  // Independent stream for a replication or a named sub-task.
  static Rng stream(std::uint64_t seed, std::uint64_t index);

  void reseed(std::uint64_t seed);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform();

  // Standard normal deviate; the polar method's spare value is cached.
  double normal();

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer on [0, bound) via rejection sampling, bound >= 1.
  std::uint64_t uniform_below(std::uint64_t bound);

 private:
  std::array<std::uint64_t, 4> state_{};
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Stable 64-bit mix for deriving sub-seeds from a base seed and tags.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag_a,
                          std::uint64_t tag_b = 0);

}  // namespace drdid
