/**
 * @file noise.hpp
 * @brief Platform-independent standard-normal draws for initial noise.
 *
 * std::normal_distribution is implementation-defined, so the transform is
 * spelled out: mt19937_64, top 53 bits to a uniform in (0, 1), Box-Muller.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "cab/state.hpp"

namespace cab {

inline constexpr const char* kNoiseAlgorithm = "mt19937_64/box-muller/v1";

[[nodiscard]] inline State standard_normal(std::size_t dimension, std::uint64_t seed) {
  std::mt19937_64 engine(seed);
  auto uniform_open = [&engine] {
    // (k + 0.5) / 2^53 lies strictly inside (0, 1).
    return (static_cast<double>(engine() >> 11) + 0.5) * 0x1.0p-53;
  };
  State out(dimension);
  for (std::size_t k = 0; k < dimension; k += 2) {
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    out[k] = radius * std::cos(angle);
    if (k + 1 < dimension) out[k + 1] = radius * std::sin(angle);
  }
  return out;
}

}  // namespace cab
