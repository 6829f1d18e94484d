#pragma once

#include <cmath>
#include <cstdint>

namespace heatctl {

// Counter-based generator used everywhere randomness is needed, so that
// runs are bit-reproducible across platforms and thread schedules.
// Algorithm identifier reported by the CLI: "splitmix64/box-muller-v1".

inline constexpr char kRngAlgorithm[] = "splitmix64/box-muller-v1";

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seed splitting rule for parallel Monte Carlo: child path i draws from
/// splitmix64 seeded at mix(base, i+1).
inline std::uint64_t child_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t s = base ^ (0xD6E8FEB86659FD93ULL * (index + 1));
  return splitmix64(s);
}

class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(splitmix64(state_) >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes two uniforms per draw.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

private:
  std::uint64_t state_;
};

} // namespace heatctl
