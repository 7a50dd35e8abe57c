#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace laneplan {

using Rng = std::mt19937_64;

// Derives independent stream seeds (world / planner / filter) from one episode seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Uniform in [0,1) with 53 random bits.
inline double draw_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// One-shot Box-Muller; no cached second variate, so streams stay reproducible
// no matter how draws interleave.
inline double draw_normal(Rng& rng) {
  const double u1 = 1.0 - draw_unit(rng);  // (0,1]
  const double u2 = draw_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

inline double std_normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

}  // namespace laneplan
