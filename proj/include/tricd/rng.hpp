#pragma once

#include <array>
#include <cstdint>

namespace tricd {

// xoshiro256** seeded through splitmix64. Output is identical on every
// platform, unlike the std:: distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  // Independent stream for worker / sample `index` under a shared base seed.
  static Rng derive(std::uint64_t base_seed, std::uint64_t index);

  std::uint64_t next_u64();
  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n);
  // Standard normal via Box-Muller (no cached second value).
  double normal();
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace tricd
