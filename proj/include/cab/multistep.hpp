/**
 * @file multistep.hpp
 * @brief Variable-step Adams-Bashforth weights and the extrapolation-defect correction.
 *
 * All formulas take signed steps h_i = rho_{i+1} - rho_i and the positive
 * ratios r_i = h_i / h_{i-1}, r_{i-1} = h_{i-1} / h_{i-2}. The corrected
 * update is
 *
 *   y_{i+1} = AB_p(y_i) + gamma_i h_i (eps_i - eps_ext),
 *   eps_ext = (1 + r_{i-1}) eps_{i-1} - r_{i-1} eps_{i-2},
 *
 * where eps_ext is the linear extrapolation of the two previous evaluations
 * to rho_i. The correction costs no extra field evaluation.
 */
#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>

#include "cab/errors.hpp"
#include "cab/state.hpp"

namespace cab {

/// Current and previous signed rho-steps of a multistep update.
struct StepGeometry {
  double h = std::numeric_limits<double>::quiet_NaN();
  double h_prev = std::numeric_limits<double>::quiet_NaN();
  double h_prev2 = std::numeric_limits<double>::quiet_NaN();

  /// Geometry with h_prev = 1 and the given ratios; the formulas only see ratios.
  [[nodiscard]] static StepGeometry from_ratios(double r, double r_prev) {
    const double h_prev = -1.0;
    return {r * h_prev, h_prev, h_prev / r_prev};
  }

  [[nodiscard]] bool has_prev2() const noexcept { return !std::isnan(h_prev2); }
  [[nodiscard]] double ratio() const noexcept { return h / h_prev; }
  [[nodiscard]] double prev_ratio() const noexcept { return h_prev / h_prev2; }

  void validate(bool need_prev2) const {
    if (!std::isfinite(h) || !std::isfinite(h_prev) || h == 0.0 || h_prev == 0.0) {
      throw GeometryError("step geometry: steps must be finite and nonzero");
    }
    if (!(ratio() > 0.0) || !std::isfinite(ratio())) {
      throw GeometryError("step geometry: r_i = " + std::to_string(ratio()) + " must be positive");
    }
    if (need_prev2) {
      if (!has_prev2() || !std::isfinite(h_prev2) || h_prev2 == 0.0) {
        throw GeometryError("step geometry: h_{i-2} required");
      }
      if (!(prev_ratio() > 0.0) || !std::isfinite(prev_ratio())) {
        throw GeometryError("step geometry: r_{i-1} = " + std::to_string(prev_ratio()) +
                            " must be positive");
      }
    }
  }

  /// True when a ratio lies outside [0.01, 100].
  [[nodiscard]] bool ratio_out_of_range() const noexcept {
    auto bad = [](double r) { return r < 0.01 || r > 100.0; };
    return bad(ratio()) || (has_prev2() && bad(prev_ratio()));
  }
};

enum class GammaMode { constant, step_scaled };

[[nodiscard]] inline std::string_view to_string(GammaMode m) noexcept {
  return m == GammaMode::constant ? "constant" : "step-scaled";
}

/// Corrector weight: a constant gamma, or gamma_i = c |h_i|.
struct GammaPolicy {
  GammaMode mode = GammaMode::constant;
  double value = 0.0;

  [[nodiscard]] static GammaPolicy constant(double gamma) { return {GammaMode::constant, gamma}; }
  [[nodiscard]] static GammaPolicy step_scaled(double c) { return {GammaMode::step_scaled, c}; }

  void validate() const {
    if (!std::isfinite(value) || value < 0.0) {
      throw ArgumentError("gamma must be finite and nonnegative, got " + std::to_string(value));
    }
    if (mode == GammaMode::constant && value >= 10.0) {
      throw ArgumentError("constant gamma must be < 10, got " + std::to_string(value));
    }
  }

  [[nodiscard]] double at(double h) const noexcept {
    return mode == GammaMode::constant ? value : value * std::abs(h);
  }
};

struct Ab2Weights {
  double current;
  double previous;
};

struct Ab3Weights {
  double b0;
  double b1;
  double b2;
};

struct ExtrapolationWeights {
  double previous;
  double previous2;
};

/// Weights of the one-line form y_{i+1} = y_i + h_i (a0 eps_i + a1 eps_{i-1} + a2 eps_{i-2}).
struct CombinedCoefficients {
  double a0;
  double a1;
  double a2;
};

[[nodiscard]] inline Ab2Weights ab2_weights(const StepGeometry& g) {
  g.validate(false);
  const double r = g.ratio();
  return {1.0 + 0.5 * r, -0.5 * r};
}

[[nodiscard]] inline Ab3Weights ab3_weights(const StepGeometry& g) {
  g.validate(true);
  const double r = g.ratio();
  const double q = g.prev_ratio();
  return {
      1.0 + r * (2.0 * q + 1.0) / (2.0 * (q + 1.0)) + q * r * r / (3.0 * (q + 1.0)),
      -r / 6.0 * (2.0 * q * r + 3.0 * q + 3.0),
      q * q * r * (2.0 * r + 3.0) / (6.0 * (q + 1.0)),
  };
}

[[nodiscard]] inline ExtrapolationWeights extrapolation_defect_weights(const StepGeometry& g) {
  g.validate(true);
  const double q = g.prev_ratio();
  return {1.0 + q, -q};
}

[[nodiscard]] inline CombinedCoefficients combined_coefficients(int order, const StepGeometry& g,
                                                                double gamma) {
  if (order == 2) {
    g.validate(true);
    const double r = g.ratio();
    const double q = g.prev_ratio();
    return {1.0 + 0.5 * r + gamma, -(0.5 * r + (1.0 + q) * gamma), q * gamma};
  }
  if (order == 3) {
    const Ab3Weights b = ab3_weights(g);
    const double q = g.prev_ratio();
    return {b.b0 + gamma, b.b1 - (1.0 + q) * gamma, b.b2 + q * gamma};
  }
  throw ArgumentError("combined_coefficients: unsupported order " + std::to_string(order));
}

/// Coefficient kappa_i of the gamma-dependent h^3 term in the CAB-3 local error.
[[nodiscard]] inline double leading_truncation_kappa(const StepGeometry& g) {
  g.validate(true);
  const double r = g.ratio();
  const double q = g.prev_ratio();
  return -(1.0 + q) / (2.0 * r * r * q);
}

/// The last three field evaluations, newest first.
class EpsilonRing {
 public:
  void push(State eps) {
    head_ = (head_ + 2) % 3;
    slots_[head_] = std::move(eps);
    if (size_ < 3) ++size_;
  }

  [[nodiscard]] std::size_t size() const noexcept { return size_; }

  /// lag 0 is the newest evaluation.
  [[nodiscard]] const State& operator[](std::size_t lag) const {
    if (lag >= size_) throw StateError("EpsilonRing: lag " + std::to_string(lag) + " not available");
    return slots_[(head_ + lag) % 3];
  }

 private:
  std::array<State, 3> slots_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

/// One CAB-p step: AB-p predictor, then gamma h (eps_i - eps_ext) added.
[[nodiscard]] inline State cab_update(int order, const State& y, const EpsilonRing& eps,
                                      const StepGeometry& g, double gamma) {
  if (order != 2 && order != 3) {
    throw ArgumentError("cab_update: unsupported order " + std::to_string(order));
  }
  const bool corrected = gamma != 0.0;
  const std::size_t needed = (order == 3 || corrected) ? 3 : 2;
  if (eps.size() < needed) {
    throw StateError("cab_update: order " + std::to_string(order) + " needs " + std::to_string(needed) +
                     " history entries, have " + std::to_string(eps.size()));
  }
  const std::size_t dim = y.size();
  for (std::size_t lag = 0; lag < needed; ++lag) require_dimension(eps[lag], dim, "cab_update history");

  State next(dim);
  if (order == 2) {
    const Ab2Weights w = ab2_weights(g);
    const State& e0 = eps[0];
    const State& e1 = eps[1];
    for (std::size_t k = 0; k < dim; ++k) next[k] = y[k] + g.h * (w.current * e0[k] + w.previous * e1[k]);
  } else {
    const Ab3Weights w = ab3_weights(g);
    const State& e0 = eps[0];
    const State& e1 = eps[1];
    const State& e2 = eps[2];
    for (std::size_t k = 0; k < dim; ++k) {
      next[k] = y[k] + g.h * (w.b0 * e0[k] + w.b1 * e1[k] + w.b2 * e2[k]);
    }
  }
  if (!corrected) return next;

  const ExtrapolationWeights x = extrapolation_defect_weights(g);
  const State& e0 = eps[0];
  const State& e1 = eps[1];
  const State& e2 = eps[2];
  const double scale = gamma * g.h;
  for (std::size_t k = 0; k < dim; ++k) {
    const double extrapolated = x.previous * e1[k] + x.previous2 * e2[k];
    next[k] += scale * (e0[k] - extrapolated);
  }
  return next;
}

}  // namespace cab
