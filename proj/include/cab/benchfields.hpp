/**
 * @file benchfields.hpp
 * @brief Benchmark right-hand sides dy/drho = v(y, rho) for convergence studies.
 *
 * v1 and v2 are two-dimensional nonlinear fields; the analytic kinds have
 * closed-form solutions and serve as exactness regressions. A synthetic tanh
 * noise model in (x, t) coordinates is provided for rectification tests.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cab/errors.hpp"
#include "cab/rectified_field.hpp"
#include "cab/state.hpp"

namespace cab::bench {

[[nodiscard]] inline State eval_v1(std::span<const double> y, double rho) {
  require_dimension(y, 2, "v1");
  const double y1 = y[0];
  const double y2 = y[1];
  return {-1.5 * y1 + 0.9 * y2 + 0.2 * y1 * y2 + 0.15 * std::sin(3.0 * rho),
          -1.0 * y2 - 0.7 * y1 + 0.1 * y1 * y1 - 0.08 * y2 * y2 + 0.1 * std::cos(2.0 * rho)};
}

[[nodiscard]] inline State eval_v2(std::span<const double> y, double rho) {
  require_dimension(y, 2, "v2");
  const double y1 = y[0];
  const double y2 = y[1];
  const double a = 0.3 + 0.4 * (y1 * y1 + y2 * y2);
  const double omega = 3.0 + 0.2 * std::sin(rho);
  return {-a * y1 - omega * y2, omega * y1 - a * y2};
}

enum class FieldKind { v1, v2, constant, linear_in_rho, quadratic_in_rho, exp_decay };

[[nodiscard]] inline std::string_view to_string(FieldKind kind) noexcept {
  switch (kind) {
    case FieldKind::v1: return "v1";
    case FieldKind::v2: return "v2";
    case FieldKind::constant: return "constant";
    case FieldKind::linear_in_rho: return "linear-in-rho";
    case FieldKind::quadratic_in_rho: return "quadratic-in-rho";
    case FieldKind::exp_decay: return "exp-decay";
  }
  return "unknown";
}

/**
 * A named benchmark field. Parameters of the analytic kinds (applied to every
 * component):
 *   constant          v = c                 (c, default 1)
 *   linear-in-rho     v = a + b rho         (a, b, defaults 1, 1)
 *   quadratic-in-rho  v = c rho^2           (c, default 1)
 *   exp-decay         v = -k y              (k, default 1)
 */
class BenchField {
 public:
  BenchField(FieldKind kind, std::size_t dimension, std::map<std::string, double> params = {})
      : kind_(kind), dimension_(dimension), params_(std::move(params)) {
    if ((kind == FieldKind::v1 || kind == FieldKind::v2) && dimension != 2) {
      throw ArgumentError(std::string(to_string(kind)) + " is two-dimensional");
    }
    if (dimension == 0) throw ArgumentError("bench field: dimension must be positive");
    for (const auto& [key, value] : params_) {
      if (!known_param(key)) {
        throw ArgumentError("field " + std::string(to_string(kind)) + ": unknown parameter '" + key + "'");
      }
      if (!std::isfinite(value)) throw ArgumentError("field parameter '" + key + "' must be finite");
    }
  }

  [[nodiscard]] FieldKind kind() const noexcept { return kind_; }
  [[nodiscard]] std::string_view name() const noexcept { return to_string(kind_); }
  [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
  [[nodiscard]] bool analytic() const noexcept { return kind_ != FieldKind::v1 && kind_ != FieldKind::v2; }

  [[nodiscard]] double param(const char* key) const {
    const auto it = params_.find(key);
    return it == params_.end() ? 1.0 : it->second;
  }

  [[nodiscard]] State operator()(std::span<const double> y, double rho) const {
    switch (kind_) {
      case FieldKind::v1: return eval_v1(y, rho);
      case FieldKind::v2: return eval_v2(y, rho);
      default: return eval_analytic(y, rho);
    }
  }

  [[nodiscard]] State eval_analytic(std::span<const double> y, double rho) const {
    require_dimension(y, dimension_, "bench field");
    State out(dimension_);
    switch (kind_) {
      case FieldKind::constant:
        std::fill(out.begin(), out.end(), param("c"));
        break;
      case FieldKind::linear_in_rho:
        std::fill(out.begin(), out.end(), param("a") + param("b") * rho);
        break;
      case FieldKind::quadratic_in_rho:
        std::fill(out.begin(), out.end(), param("c") * rho * rho);
        break;
      case FieldKind::exp_decay: {
        const double k = param("k");
        for (std::size_t i = 0; i < dimension_; ++i) out[i] = -k * y[i];
        break;
      }
      default:
        throw ArgumentError("eval_analytic: " + std::string(name()) + " has no closed form");
    }
    return out;
  }

  /// Exact solution at rho_to of the IVP y(rho_from) = y0.
  [[nodiscard]] State exact_solution(std::span<const double> y0, double rho_from, double rho_to) const {
    require_dimension(y0, dimension_, "exact_solution");
    State out(y0.begin(), y0.end());
    const double d = rho_to - rho_from;
    switch (kind_) {
      case FieldKind::constant:
        for (double& v : out) v += param("c") * d;
        break;
      case FieldKind::linear_in_rho: {
        const double inc = param("a") * d + 0.5 * param("b") * (rho_to * rho_to - rho_from * rho_from);
        for (double& v : out) v += inc;
        break;
      }
      case FieldKind::quadratic_in_rho: {
        const double inc = param("c") * (rho_to * rho_to * rho_to - rho_from * rho_from * rho_from) / 3.0;
        for (double& v : out) v += inc;
        break;
      }
      case FieldKind::exp_decay: {
        const double factor = std::exp(-param("k") * d);
        for (double& v : out) v *= factor;
        break;
      }
      default:
        throw ArgumentError("exact_solution: " + std::string(name()) + " has no closed form");
    }
    return out;
  }

  /// Conventional initial state for studies: (0.8, -0.5) for v1, (1, 0) for v2, ones otherwise.
  [[nodiscard]] State default_initial_state() const {
    switch (kind_) {
      case FieldKind::v1: return {0.8, -0.5};
      case FieldKind::v2: return {1.0, 0.0};
      default: return State(dimension_, 1.0);
    }
  }

 private:
  [[nodiscard]] bool known_param(const std::string& key) const {
    switch (kind_) {
      case FieldKind::constant:
      case FieldKind::quadratic_in_rho: return key == "c";
      case FieldKind::linear_in_rho: return key == "a" || key == "b";
      case FieldKind::exp_decay: return key == "k";
      default: return false;
    }
  }

  FieldKind kind_;
  std::size_t dimension_;
  std::map<std::string, double> params_;
};

[[nodiscard]] inline FieldKind parse_field_kind(std::string_view name) {
  for (FieldKind k : {FieldKind::v1, FieldKind::v2, FieldKind::constant, FieldKind::linear_in_rho,
                      FieldKind::quadratic_in_rho, FieldKind::exp_decay}) {
    if (name == to_string(k)) return k;
  }
  throw DomainError("unknown field '" + std::string(name) + "'");
}

[[nodiscard]] inline BenchField make_field(std::string_view name, std::size_t dimension = 2,
                                           std::map<std::string, double> params = {}) {
  const FieldKind kind = parse_field_kind(name);
  if (kind == FieldKind::v1 || kind == FieldKind::v2) dimension = 2;
  return BenchField(kind, dimension, std::move(params));
}

/// Noise-prediction model whose rectified field is exactly the given bench field:
/// eps(x, t) = v(x / s(t), rho(t)).
[[nodiscard]] inline ModelField as_noise_model(BenchField field, Schedule schedule) {
  const std::size_t dim = field.dimension();
  return ModelField(
      Parameterization::noise,
      [field = std::move(field), schedule = std::move(schedule)](const State& x, double t) {
        const SchedulePoint q = schedule.eval(t);
        return field(scaled(x, 1.0 / q.s), q.rho);
      },
      dim, true);
}

/**
 * Smooth synthetic noise field eps*(x, t) = tanh(A x + b t + c), elementwise,
 * with fixed deterministic coefficients:
 *   A_jk = 0.6 if j == k, else 0.15 sin(1 + j + 2k);  b_j = 0.4 cos(1 + j);  c_j = 0.1 (j + 1) - 0.2.
 */
class TanhField {
 public:
  explicit TanhField(std::size_t dimension) : dim_(dimension), a_(dimension * dimension), b_(dimension), c_(dimension) {
    if (dimension == 0) throw ArgumentError("TanhField: dimension must be positive");
    for (std::size_t j = 0; j < dim_; ++j) {
      for (std::size_t k = 0; k < dim_; ++k) {
        a_[j * dim_ + k] = j == k ? 0.6 : 0.15 * std::sin(1.0 + static_cast<double>(j) + 2.0 * static_cast<double>(k));
      }
      b_[j] = 0.4 * std::cos(1.0 + static_cast<double>(j));
      c_[j] = 0.1 * static_cast<double>(j + 1) - 0.2;
    }
  }

  [[nodiscard]] std::size_t dimension() const noexcept { return dim_; }

  [[nodiscard]] State operator()(const State& x, double t) const {
    require_dimension(x, dim_, "TanhField");
    State out(dim_);
    for (std::size_t j = 0; j < dim_; ++j) {
      double acc = b_[j] * t + c_[j];
      for (std::size_t k = 0; k < dim_; ++k) acc += a_[j * dim_ + k] * x[k];
      out[j] = std::tanh(acc);
    }
    return out;
  }

 private:
  std::size_t dim_;
  std::vector<double> a_;
  std::vector<double> b_;
  std::vector<double> c_;
};

[[nodiscard]] inline ModelField tanh_noise_model(std::size_t dimension) {
  return ModelField(Parameterization::noise, TanhField(dimension), dimension, true);
}

/// Constant noise prediction c in every component.
[[nodiscard]] inline ModelField constant_noise_model(std::size_t dimension, double c = 1.0) {
  return ModelField(
      Parameterization::noise, [dimension, c](const State&, double) { return State(dimension, c); }, dimension,
      true);
}

}  // namespace cab::bench
