#pragma once

#include <cmath>
#include <cstdint>

namespace qkdlc {

// SplitMix64 generator. Streams are derived from (seed, stream index), so a
// loop over pulses or trial indices produces the same draws whether it runs
// serially or split across workers.
struct SplitMix64 {
  std::uint64_t state = 0;

  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t next() {
    state += kGamma;
    return mix(state);
  }

  // Uniform in [0, 1), 53 random bits.
  double next_u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; consumes two uniforms.
  double next_gaussian() {
    const double u1 = 1.0 - next_u01();  // (0, 1], keeps log finite
    const double u2 = next_u01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }
};

inline SplitMix64 stream_rng(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t tag = SplitMix64::mix(index * SplitMix64::kGamma + 0x853c49e6748fea9bULL);
  return SplitMix64{SplitMix64::mix(seed ^ tag)};
}

// Poisson draw by CDF inversion from a single uniform. Exact for mean 0.
// Means in this project stay below ~30, where sequential inversion is both
// fast and numerically sound; the cap guards the unreachable far tail.
inline std::int64_t poisson_draw(SplitMix64& rng, double mean) {
  if (mean <= 0.0) return 0;
  const double u = rng.next_u01();
  double pmf = std::exp(-mean);
  double cdf = pmf;
  std::int64_t n = 0;
  const auto cap = static_cast<std::int64_t>(mean + 20.0 * std::sqrt(mean) + 50.0);
  while (u >= cdf && n < cap) {
    ++n;
    pmf *= mean / static_cast<double>(n);
    cdf += pmf;
  }
  return n;
}

}  // namespace qkdlc
