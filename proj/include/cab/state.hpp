/**
 * @file state.hpp
 * @brief State-vector alias and the handful of vector helpers the solvers need.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "cab/errors.hpp"

namespace cab {

using State = std::vector<double>;

[[nodiscard]] inline bool all_finite(std::span<const double> v) noexcept {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

[[nodiscard]] inline double norm2(std::span<const double> v) noexcept {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

[[nodiscard]] inline double distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ArgumentError("distance: dimension mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

[[nodiscard]] inline State scaled(std::span<const double> v, double factor) {
  State out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = factor * v[k];
  return out;
}

inline void require_dimension(std::span<const double> v, std::size_t dim, const char* what) {
  if (v.size() != dim) {
    throw ArgumentError(std::string(what) + ": expected dimension " + std::to_string(dim) +
                        ", got " + std::to_string(v.size()));
  }
}

}  // namespace cab
