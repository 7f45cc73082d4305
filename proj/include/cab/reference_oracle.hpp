/**
 * @file reference_oracle.hpp
 * @brief Adaptive Dormand-Prince 5(4) integrator used to produce reference solutions.
 *
 * Error control is componentwise, err_k <= atol + rtol * max(|y_k|, |y_new_k|),
 * with a PI step-size controller. Every requested output point is hit exactly
 * by shortening the step that would cross it, so reported values carry no
 * interpolation error. The propagated solution is the 5th-order one.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cab/errors.hpp"
#include "cab/state.hpp"

namespace cab::oracle {

/// Classical order of the propagated solution.
inline constexpr int kDesignOrder = 5;

struct OracleConfig {
  double rtol = 1e-9;
  double atol = 1e-13;
  std::size_t max_steps = 1'000'000;
  std::optional<double> initial_step;

  [[nodiscard]] static OracleConfig golden() { return {1e-11, 1e-13, 1'000'000, std::nullopt}; }

  void validate() const {
    if (!(rtol >= 1e-14)) throw ArgumentError("oracle: rtol must be >= 1e-14");
    if (!(atol >= 1e-16)) throw ArgumentError("oracle: atol must be >= 1e-16");
    if (max_steps < 1) throw ArgumentError("oracle: max_steps must be >= 1");
  }
};

struct OracleStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evals = 0;
};

struct OracleResult {
  std::vector<State> states;
  OracleStats stats;
};

namespace detail {

// Dormand & Prince (1980) tableau.
inline constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
inline constexpr double a21 = 1.0 / 5.0;
inline constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
inline constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
inline constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                        a54 = -212.0 / 729.0;
inline constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                        a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
inline constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                        b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
// b - b_hat (embedded 4th-order weights).
inline constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                        e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

struct StepResult {
  State y_new;
  State k7;
  State err;
};

template <class Rhs>
StepResult dp_step(Rhs& rhs, double t, const State& y, const State& k1, double h, OracleStats& stats) {
  const std::size_t n = y.size();
  State tmp(n);
  auto stage = [&](double tc) {
    ++stats.rhs_evals;
    State k = rhs(tmp, tc);
    if (k.size() != n) throw ArgumentError("oracle: rhs returned wrong dimension");
    return k;
  };
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
  const State k2 = stage(t + c2 * h);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
  const State k3 = stage(t + c3 * h);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
  const State k4 = stage(t + c4 * h);
  for (std::size_t i = 0; i < n; ++i) {
    tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
  }
  const State k5 = stage(t + c5 * h);
  for (std::size_t i = 0; i < n; ++i) {
    tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
  }
  const State k6 = stage(t + h);
  StepResult out;
  out.y_new.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.y_new[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
  }
  tmp = out.y_new;
  out.k7 = stage(t + h);
  out.err.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * out.k7[i]);
  }
  return out;
}

}  // namespace detail

/**
 * Integrates dy/dtau = rhs(y, tau) from span_start and reports y at each output
 * point. Output points must be ordered in the direction of integration and lie
 * within [span_start, span_end] (either orientation).
 */
template <class Rhs>
[[nodiscard]] OracleResult integrate(Rhs&& rhs, double span_start, double span_end, const State& y0,
                                     const OracleConfig& cfg, std::span<const double> output_points) {
  cfg.validate();
  const double span = span_end - span_start;
  if (!std::isfinite(span) || span == 0.0) throw ArgumentError("oracle: degenerate span");
  if (!all_finite(y0)) throw ArgumentError("oracle: non-finite initial state");
  const double dir = span > 0.0 ? 1.0 : -1.0;
  const double lo = std::min(span_start, span_end);
  const double hi = std::max(span_start, span_end);
  for (std::size_t k = 0; k < output_points.size(); ++k) {
    const double p = output_points[k];
    if (!(p >= lo && p <= hi)) throw ArgumentError("oracle: output point outside span");
    if (k > 0 && dir * (p - output_points[k - 1]) < 0.0) {
      throw ArgumentError("oracle: output points not ordered along the span");
    }
  }

  constexpr double safety = 0.9;
  constexpr double fac_min = 0.2;
  constexpr double fac_max = 10.0;
  constexpr double beta = 0.04;
  constexpr double alpha = 1.0 / kDesignOrder - 0.75 * beta;
  const double h_floor = 100.0 * std::numeric_limits<double>::epsilon() * std::abs(span);

  OracleResult result;
  result.states.reserve(output_points.size());
  auto call = [&](const State& y, double tau) {
    return rhs(y, tau);
  };

  double tau = span_start;
  State y = y0;
  State k1 = call(y, tau);
  ++result.stats.rhs_evals;
  double h = dir * std::abs(cfg.initial_step.value_or(std::abs(span) / 100.0));
  double err_prev = 1e-4;

  for (double target : output_points) {
    while (dir * (target - tau) > 0.0) {
      if (result.stats.accepted >= cfg.max_steps) {
        throw StiffnessError("oracle: max_steps (" + std::to_string(cfg.max_steps) + ") exceeded at tau=" +
                             std::to_string(tau));
      }
      if (std::abs(h) < h_floor) {
        throw StepUnderflowError("oracle: step size underflow at tau=" + std::to_string(tau));
      }
      const double remaining = target - tau;
      const bool clipped = std::abs(h) >= std::abs(remaining);
      const double h_try = clipped ? remaining : h;
      detail::StepResult step = detail::dp_step(call, tau, y, k1, h_try, result.stats);

      double err = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double sc = cfg.atol + cfg.rtol * std::max(std::abs(y[i]), std::abs(step.y_new[i]));
        err = std::max(err, std::abs(step.err[i]) / sc);
      }
      if (!std::isfinite(err) || !all_finite(step.y_new)) {
        ++result.stats.rejected;
        h = h_try * fac_min;
        continue;
      }
      if (err <= 1.0) {
        const double e = std::max(err, 1e-10);
        double fac = std::pow(e, -alpha) * std::pow(err_prev, beta) * safety;
        fac = std::clamp(fac, fac_min, fac_max);
        err_prev = std::max(err, 1e-4);
        ++result.stats.accepted;
        tau = clipped ? target : tau + h_try;
        y = std::move(step.y_new);
        k1 = std::move(step.k7);
        // A clipped step does not shrink the step carried forward.
        h = (clipped ? std::max(std::abs(h), std::abs(h_try) * fac) : std::abs(h_try) * fac) * dir;
      } else {
        ++result.stats.rejected;
        const double fac = std::max(fac_min, safety * std::pow(err, -alpha));
        h = h_try * fac;
      }
    }
    result.states.push_back(y);
  }
  return result;
}

/// Fixed-step Dormand-Prince 5th-order solution, for order verification of the pair itself.
template <class Rhs>
[[nodiscard]] State integrate_fixed_step(Rhs&& rhs, double span_start, double span_end, const State& y0,
                                         std::size_t steps) {
  if (steps == 0) throw ArgumentError("oracle: steps must be positive");
  const double h = (span_end - span_start) / static_cast<double>(steps);
  auto call = [&](const State& y, double tau) { return rhs(y, tau); };
  OracleStats stats;
  State y = y0;
  State k1 = call(y, span_start);
  for (std::size_t k = 0; k < steps; ++k) {
    const double tau = span_start + static_cast<double>(k) * h;
    detail::StepResult step = detail::dp_step(call, tau, y, k1, h, stats);
    y = std::move(step.y_new);
    k1 = std::move(step.k7);
  }
  return y;
}

}  // namespace cab::oracle
