/**
 * @file rectified_field.hpp
 * @brief Model parameterizations and the noise-to-signal rectification.
 *
 * In rescaled coordinates y = x / s and time rho = sigma / s the reverse-time
 * probability-flow ODE becomes dy/drho = eps(s y, t(rho)): the drift induced
 * by the schedule disappears and the right-hand side is the noise prediction
 * itself. Data- and velocity-prediction models are converted to that noise
 * field pointwise.
 */
#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <utility>

#include "cab/errors.hpp"
#include "cab/schedule.hpp"
#include "cab/state.hpp"

namespace cab {

enum class Parameterization { noise, data, velocity };

[[nodiscard]] inline std::string_view to_string(Parameterization p) noexcept {
  switch (p) {
    case Parameterization::noise: return "noise";
    case Parameterization::data: return "data";
    case Parameterization::velocity: return "velocity";
  }
  return "unknown";
}

/// Network evaluator in original coordinates: (x, t) -> prediction.
using ModelFn = std::function<State(const State& x, double t)>;

/// A model evaluator tagged with what it predicts.
class ModelField {
 public:
  ModelField(Parameterization parameterization, ModelFn evaluator, std::size_t dimension,
             bool reentrant = false)
      : parameterization_(parameterization),
        evaluator_(std::move(evaluator)),
        dimension_(dimension),
        reentrant_(reentrant) {
    if (dimension_ == 0) throw ArgumentError("ModelField: dimension must be positive");
    if (!evaluator_) throw ArgumentError("ModelField: evaluator is empty");
  }

  [[nodiscard]] Parameterization parameterization() const noexcept { return parameterization_; }
  [[nodiscard]] std::size_t dimension() const noexcept { return dimension_; }
  [[nodiscard]] bool reentrant() const noexcept { return reentrant_; }

  /// Calls the evaluator once and checks dimension and finiteness of the output.
  [[nodiscard]] State operator()(const State& x, double t) const {
    require_dimension(x, dimension_, "ModelField input");
    State out = evaluator_(x, t);
    if (out.size() != dimension_) {
      throw ArgumentError("ModelField: evaluator returned dimension " + std::to_string(out.size()) +
                          ", declared " + std::to_string(dimension_));
    }
    if (!all_finite(out)) {
      throw NumericError("ModelField: non-finite " + std::string(to_string(parameterization_)) +
                         " prediction at t=" + std::to_string(t));
    }
    return out;
  }

 private:
  Parameterization parameterization_;
  ModelFn evaluator_;
  std::size_t dimension_;
  bool reentrant_;
};

/// Converts a model output at (x, t) into the equivalent noise prediction.
[[nodiscard]] inline State noise_from_output(Parameterization p, const State& output, const State& x,
                                             const SchedulePoint& q) {
  State eps(output.size());
  switch (p) {
    case Parameterization::noise:
      eps = output;
      break;
    case Parameterization::data:
      // x = s xhat + sigma eps
      for (std::size_t k = 0; k < eps.size(); ++k) eps[k] = (x[k] - q.s * output[k]) / q.sigma;
      break;
    case Parameterization::velocity: {
      // v = (sdot/s) x + s rhodot eps
      const double denom = q.s * q.rhodot;
      if (!(denom > 0.0)) throw ScheduleViolation("velocity adapter: s*rhodot <= 0");
      const double f = q.sdot / q.s;
      for (std::size_t k = 0; k < eps.size(); ++k) eps[k] = (output[k] - f * x[k]) / denom;
      break;
    }
  }
  return eps;
}

/// Noise prediction of any parameterization, in original (x, t) coordinates.
[[nodiscard]] inline State noise_prediction(const ModelField& model, const Schedule& schedule,
                                            const State& x, double t) {
  const SchedulePoint q = schedule.eval(t);
  return noise_from_output(model.parameterization(), model(x, t), x, q);
}

/// Right-hand side of the un-rectified reverse ODE dx/dt = f x + g^2/(2 sigma) eps.
[[nodiscard]] inline State reverse_ode_rhs(const ModelField& model, const Schedule& schedule,
                                           const State& x, double t) {
  const SchedulePoint q = schedule.eval(t);
  if (!(q.sigma > 0.0)) throw NumericError("reverse_ode_rhs: sigma(t) = 0 is singular");
  const SdeCoefficients c = schedule.sde_coefficients(t);
  const State eps = noise_from_output(model.parameterization(), model(x, t), x, q);
  const double w = c.g_squared / (2.0 * q.sigma);
  State out(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = c.f * x[k] + w * eps[k];
  return out;
}

/// The rectified field eps(y, rho) of a model under a schedule.
class RectifiedField {
 public:
  static constexpr double kMinRho = 1e-12;

  RectifiedField(ModelField model, Schedule schedule)
      : model_(std::move(model)), schedule_(std::move(schedule)) {}

  [[nodiscard]] const ModelField& model() const noexcept { return model_; }
  [[nodiscard]] const Schedule& schedule() const noexcept { return schedule_; }
  [[nodiscard]] std::size_t dimension() const noexcept { return model_.dimension(); }

  [[nodiscard]] State operator()(const State& y, double rho) const {
    return eval_at(y, rho, schedule_.invert_rho(rho));
  }

  /// Same as operator() when t is already known to satisfy rho(t) = rho.
  [[nodiscard]] State eval_at(const State& y, double rho, double t) const {
    require_dimension(y, model_.dimension(), "RectifiedField state");
    if (!all_finite(y)) throw NumericError("RectifiedField: non-finite state");
    const SchedulePoint q = schedule_.eval(t);
    const State x = scaled(y, q.s);
    const State out = model_(x, t);
    State eps(out.size());
    switch (model_.parameterization()) {
      case Parameterization::noise:
        return out;
      case Parameterization::data:
        if (rho < kMinRho) throw DomainError("data adapter: rho below division guard");
        for (std::size_t k = 0; k < eps.size(); ++k) eps[k] = (y[k] - out[k]) / rho;
        return eps;
      case Parameterization::velocity: {
        const double denom = q.s * q.rhodot;
        if (!(denom > 0.0)) throw ScheduleViolation("velocity adapter: s*rhodot <= 0");
        for (std::size_t k = 0; k < eps.size(); ++k) eps[k] = (out[k] - q.sdot * y[k]) / denom;
        return eps;
      }
    }
    return eps;
  }

 private:
  ModelField model_;
  Schedule schedule_;
};

[[nodiscard]] inline State rectify_eval(const RectifiedField& field, const State& y, double rho) {
  return field(y, rho);
}

}  // namespace cab
