/**
 * @file schedule.hpp
 * @brief Affine-Gaussian forward paths x_t = s(t) x_0 + sigma(t) eps.
 *
 * A Schedule exposes the scale s, the noise level sigma, their time
 * derivatives, the noise-to-signal ratio rho = sigma / s and its derivative,
 * and the coefficients of the equivalent linear forward SDE. Built-in
 * families supply analytic derivatives; custom schedules supply evaluators
 * and are validated on a dense probe grid at construction.
 */
#pragma once

#include <cmath>
#include <limits>
#include <cstddef>
#include <functional>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "cab/errors.hpp"

namespace cab {

enum class ScheduleKind { vp_linear, ve, rectified_flow, custom };

[[nodiscard]] inline std::string_view to_string(ScheduleKind kind) noexcept {
  switch (kind) {
    case ScheduleKind::vp_linear: return "vp-linear";
    case ScheduleKind::ve: return "ve";
    case ScheduleKind::rectified_flow: return "rectified-flow";
    case ScheduleKind::custom: return "custom";
  }
  return "unknown";
}

struct SchedulePoint {
  double s;
  double sdot;
  double sigma;
  double sigmadot;
  double rho;
  double rhodot;
};

struct SdeCoefficients {
  double f;
  double g_squared;
};

/// User-supplied evaluators for a custom schedule.
struct ScheduleFunctions {
  std::function<double(double)> s;
  std::function<double(double)> sdot;
  std::function<double(double)> sigma;
  std::function<double(double)> sigmadot;
};

class Schedule {
 public:
  static constexpr std::size_t kProbePoints = 1024;

  [[nodiscard]] static Schedule vp_linear(double beta0 = 0.1, double beta1 = 20.0,
                                          double t_min = 1e-3, double t_max = 1.0) {
    if (!(beta0 >= 0.0) || !(beta1 > beta0)) {
      throw DomainError("vp-linear: require 0 <= beta0 < beta1");
    }
    Schedule out(ScheduleKind::vp_linear, t_min, t_max);
    out.params_ = {{"beta0", beta0}, {"beta1", beta1}};
    out.beta0_ = beta0;
    out.beta1_ = beta1;
    out.validate();
    return out;
  }

  [[nodiscard]] static Schedule ve(double t_min = 2e-3, double t_max = 80.0) {
    Schedule out(ScheduleKind::ve, t_min, t_max);
    out.validate();
    return out;
  }

  [[nodiscard]] static Schedule rectified_flow(double t_min = 1e-3, double t_max = 1.0 - 1e-3) {
    if (t_max >= 1.0) throw DomainError("rectified-flow: t_max must be < 1");
    Schedule out(ScheduleKind::rectified_flow, t_min, t_max);
    out.validate();
    return out;
  }

  [[nodiscard]] static Schedule custom(ScheduleFunctions fns, double t_min, double t_max) {
    if (!fns.s || !fns.sdot || !fns.sigma || !fns.sigmadot) {
      throw ArgumentError("custom schedule: all four evaluators are required");
    }
    Schedule out(ScheduleKind::custom, t_min, t_max);
    out.fns_ = std::move(fns);
    out.validate();
    return out;
  }

  [[nodiscard]] ScheduleKind kind() const noexcept { return kind_; }
  [[nodiscard]] double t_min() const noexcept { return t_min_; }
  [[nodiscard]] double t_max() const noexcept { return t_max_; }
  [[nodiscard]] const std::map<std::string, double>& parameters() const noexcept { return params_; }

  [[nodiscard]] bool contains(double t) const noexcept { return t >= t_min_ && t <= t_max_; }

  [[nodiscard]] SchedulePoint eval(double t) const {
    if (!contains(t)) {
      throw DomainError("schedule " + std::string(to_string(kind_)) + ": t=" + std::to_string(t) +
                        " outside [" + std::to_string(t_min_) + ", " + std::to_string(t_max_) + "]");
    }
    const SchedulePoint p = raw_eval(t);
    check_finite(p.s, "s", t);
    check_finite(p.sdot, "sdot", t);
    check_finite(p.sigma, "sigma", t);
    check_finite(p.sigmadot, "sigmadot", t);
    check_finite(p.rho, "rho", t);
    check_finite(p.rhodot, "rhodot", t);
    return p;
  }

  [[nodiscard]] double rho(double t) const { return eval(t).rho; }
  [[nodiscard]] double rho_min() const noexcept { return rho_lo_; }
  [[nodiscard]] double rho_max() const noexcept { return rho_hi_; }

  [[nodiscard]] SdeCoefficients sde_coefficients(double t) const {
    const SchedulePoint p = eval(t);
    const double f = p.sdot / p.s;
    const double g2 = 2.0 * p.sigma * (p.sigmadot - f * p.sigma);
    if (g2 < -1e-12) {
      throw ScheduleViolation("sde_coefficients: g^2 = " + std::to_string(g2) + " < 0 at t=" +
                              std::to_string(t));
    }
    return {f, g2 < 0.0 ? 0.0 : g2};
  }

  /// Time at which rho(t) equals the given ratio.
  [[nodiscard]] double invert_rho(double target) const {
    // Rounding slack at the ends; the result is clamped to the domain.
    const double slack = 64.0 * std::numeric_limits<double>::epsilon();
    if (target < rho_lo_ && target >= rho_lo_ * (1.0 - slack)) target = rho_lo_;
    if (target > rho_hi_ && target <= rho_hi_ * (1.0 + slack)) target = rho_hi_;
    if (!(target >= rho_lo_ && target <= rho_hi_)) {
      throw DomainError("invert_rho: rho=" + std::to_string(target) + " outside [" +
                        std::to_string(rho_lo_) + ", " + std::to_string(rho_hi_) + "]");
    }
    switch (kind_) {
      case ScheduleKind::ve: return clamp_time(target);
      case ScheduleKind::rectified_flow: return clamp_time(target / (1.0 + target));
      default: break;
    }
    // Bisection down to floating-point resolution.
    double lo = t_min_;
    double hi = t_max_;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
      const double mid = lo + 0.5 * (hi - lo);
      if (mid <= lo || mid >= hi) break;
      if (raw_eval(mid).rho < target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    const double err_lo = std::abs(raw_eval(lo).rho - target);
    const double err_hi = std::abs(raw_eval(hi).rho - target);
    return err_lo <= err_hi ? lo : hi;
  }

 private:
  Schedule(ScheduleKind kind, double t_min, double t_max) : kind_(kind), t_min_(t_min), t_max_(t_max) {
    if (!std::isfinite(t_min) || !std::isfinite(t_max) || !(t_min < t_max)) {
      throw DomainError("schedule: require finite t_min < t_max");
    }
  }

  [[nodiscard]] double clamp_time(double t) const noexcept {
    return t < t_min_ ? t_min_ : (t > t_max_ ? t_max_ : t);
  }

  static void check_finite(double v, const char* name, double t) {
    if (!std::isfinite(v)) {
      throw NumericError(std::string("schedule: non-finite ") + name + " at t=" + std::to_string(t));
    }
  }

  [[nodiscard]] SchedulePoint raw_eval(double t) const {
    switch (kind_) {
      case ScheduleKind::vp_linear: {
        const double log_s = -0.25 * t * t * (beta1_ - beta0_) - 0.5 * t * beta0_;
        const double b = 0.5 * t * (beta1_ - beta0_) + 0.5 * beta0_;
        const double s = std::exp(log_s);
        const double sigma = std::sqrt(-std::expm1(2.0 * log_s));
        return {s, -b * s, sigma, b * s * s / sigma, sigma / s, b / (s * sigma)};
      }
      case ScheduleKind::ve:
        return {1.0, 0.0, t, 1.0, t, 1.0};
      case ScheduleKind::rectified_flow: {
        const double s = 1.0 - t;
        return {s, -1.0, t, 1.0, t / s, 1.0 / (s * s)};
      }
      case ScheduleKind::custom: {
        const double s = fns_.s(t);
        const double sdot = fns_.sdot(t);
        const double sigma = fns_.sigma(t);
        const double sigmadot = fns_.sigmadot(t);
        return {s, sdot, sigma, sigmadot, sigma / s, (sigmadot * s - sigma * sdot) / (s * s)};
      }
    }
    return {};
  }

  void validate() {
    const std::string name(to_string(kind_));
    double prev_rho = 0.0;
    for (std::size_t k = 0; k < kProbePoints; ++k) {
      const double t = (k + 1 == kProbePoints)
                           ? t_max_
                           : t_min_ + (t_max_ - t_min_) * static_cast<double>(k) /
                                          static_cast<double>(kProbePoints - 1);
      const SchedulePoint p = eval(t);
      if (!(p.s > 0.0) || !(p.sigma > 0.0)) {
        throw ScheduleViolation(name + ": s and sigma must be positive (t=" + std::to_string(t) + ")");
      }
      if (!(p.rhodot > 0.0)) {
        throw ScheduleViolation(name + ": rho must be strictly increasing (rhodot <= 0 at t=" +
                                std::to_string(t) + ")");
      }
      const double implied = (p.sigmadot * p.s - p.sigma * p.sdot) / (p.s * p.s);
      if (std::abs(implied - p.rhodot) > 1e-10 * std::abs(p.rhodot)) {
        throw ScheduleViolation(name + ": rhodot inconsistent with supplied derivatives at t=" +
                                std::to_string(t));
      }
      if (k > 0 && !(p.rho > prev_rho)) {
        throw ScheduleViolation(name + ": rho not strictly increasing near t=" + std::to_string(t));
      }
      prev_rho = p.rho;
      if (k == 0) rho_lo_ = p.rho;
    }
    rho_hi_ = prev_rho;
  }

  ScheduleKind kind_;
  double t_min_;
  double t_max_;
  double beta0_ = 0.0;
  double beta1_ = 0.0;
  ScheduleFunctions fns_;
  std::map<std::string, double> params_;
  double rho_lo_ = 0.0;
  double rho_hi_ = 0.0;
};

/// Builds a built-in schedule from its CLI name ("vp", "ve", "rf" or the long kind names).
[[nodiscard]] inline Schedule make_schedule(std::string_view name,
                                            const std::map<std::string, double>& params = {}) {
  auto get = [&](const char* key, double fallback) {
    const auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  auto reject_unknown = [&](std::initializer_list<std::string_view> known) {
    for (const auto& [key, value] : params) {
      bool ok = false;
      for (auto k : known) ok = ok || key == k;
      if (!ok) throw DomainError("schedule " + std::string(name) + ": unknown parameter '" + key + "'");
    }
  };
  if (name == "vp" || name == "vp-linear") {
    reject_unknown({"beta0", "beta1", "t_min", "t_max"});
    return Schedule::vp_linear(get("beta0", 0.1), get("beta1", 20.0), get("t_min", 1e-3), get("t_max", 1.0));
  }
  if (name == "ve") {
    reject_unknown({"t_min", "t_max"});
    return Schedule::ve(get("t_min", 2e-3), get("t_max", 80.0));
  }
  if (name == "rf" || name == "rectified-flow") {
    reject_unknown({"t_min", "t_max"});
    return Schedule::rectified_flow(get("t_min", 1e-3), get("t_max", 1.0 - 1e-3));
  }
  throw DomainError("unknown schedule '" + std::string(name) + "' (expected vp, ve or rf)");
}

}  // namespace cab
