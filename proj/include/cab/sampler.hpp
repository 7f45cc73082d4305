/**
 * @file sampler.hpp
 * @brief CAB-p sampling on the induced rho-grid.
 *
 * The update ladder is: Euler at step 0, variable-step AB2 at step 1, and the
 * corrected AB-p update (cab_update) from step 2 on. Exactly one field
 * evaluation is made per grid interval. RhoStepper holds the multistep state
 * and is driven by externally supplied field values, so the same object backs
 * in-process sampling, benchmark studies and host-driven stepping.
 */
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cab/errors.hpp"
#include "cab/multistep.hpp"
#include "cab/rectified_field.hpp"
#include "cab/reference_oracle.hpp"
#include "cab/schedule.hpp"
#include "cab/state.hpp"

namespace cab {

enum class Solver { euler, ab2, ab3, cab2, cab3 };

[[nodiscard]] inline std::string_view to_string(Solver s) noexcept {
  switch (s) {
    case Solver::euler: return "euler";
    case Solver::ab2: return "ab2";
    case Solver::ab3: return "ab3";
    case Solver::cab2: return "cab2";
    case Solver::cab3: return "cab3";
  }
  return "unknown";
}

[[nodiscard]] inline Solver parse_solver(std::string_view name) {
  for (Solver s : {Solver::euler, Solver::ab2, Solver::ab3, Solver::cab2, Solver::cab3}) {
    if (name == to_string(s)) return s;
  }
  throw DomainError("unknown solver '" + std::string(name) + "' (expected euler, ab2, ab3, cab2 or cab3)");
}

/// Multistep order used from step 2 on (1 for Euler).
[[nodiscard]] constexpr int solver_order(Solver s) noexcept {
  switch (s) {
    case Solver::euler: return 1;
    case Solver::ab2:
    case Solver::cab2: return 2;
    case Solver::ab3:
    case Solver::cab3: return 3;
  }
  return 0;
}

[[nodiscard]] constexpr bool solver_corrected(Solver s) noexcept {
  return s == Solver::cab2 || s == Solver::cab3;
}

enum class GridKind { uniform_t, uniform_rho, log_uniform_rho };

[[nodiscard]] inline std::string_view to_string(GridKind g) noexcept {
  switch (g) {
    case GridKind::uniform_t: return "uniform-t";
    case GridKind::uniform_rho: return "uniform-rho";
    case GridKind::log_uniform_rho: return "log-uniform-rho";
  }
  return "unknown";
}

[[nodiscard]] inline GridKind parse_grid_kind(std::string_view name) {
  for (GridKind g : {GridKind::uniform_t, GridKind::uniform_rho, GridKind::log_uniform_rho}) {
    if (name == to_string(g)) return g;
  }
  throw DomainError("unknown grid '" + std::string(name) + "'");
}

/// Descending time nodes, the induced rho nodes and the signed rho-steps between them.
struct SamplingGrid {
  std::vector<double> t;
  std::vector<double> rho;
  std::vector<double> h;
  bool merged_terminal = false;

  [[nodiscard]] std::size_t nodes() const noexcept { return rho.size(); }
  [[nodiscard]] std::size_t intervals() const noexcept { return h.size(); }

  [[nodiscard]] double h_max() const noexcept {
    double m = 0.0;
    for (double s : h) m = std::max(m, std::abs(s));
    return m;
  }
};

/// Schedule-free grid directly in rho (t is left empty). Used by benchmark studies.
[[nodiscard]] inline SamplingGrid uniform_rho_grid(double rho_start, double rho_end, std::size_t intervals) {
  if (intervals < 2) throw ArgumentError("uniform_rho_grid: need at least 2 intervals");
  if (!std::isfinite(rho_start) || !std::isfinite(rho_end) || rho_start == rho_end) {
    throw ArgumentError("uniform_rho_grid: degenerate span");
  }
  SamplingGrid g;
  g.rho.resize(intervals + 1);
  const double n = static_cast<double>(intervals);
  for (std::size_t k = 0; k <= intervals; ++k) {
    g.rho[k] = rho_start + (rho_end - rho_start) * static_cast<double>(k) / n;
  }
  g.rho.back() = rho_end;
  for (std::size_t k = 0; k < intervals; ++k) g.h.push_back(g.rho[k + 1] - g.rho[k]);
  return g;
}

/**
 * Builds the sampling grid from t_start (default t_max) down to t_end
 * (default t_min) with N intervals. With terminal_merge the penultimate node
 * is dropped, fusing the last two rho-intervals.
 */
[[nodiscard]] inline SamplingGrid build_grid(const Schedule& schedule, GridKind kind, int steps,
                                             bool terminal_merge = true, std::optional<double> t_start = {},
                                             std::optional<double> t_end = {}) {
  if (steps < 3) {
    throw ArgumentError("build_grid: N=" + std::to_string(steps) + " but at least N >= 3 steps are required");
  }
  const double t0 = t_start.value_or(schedule.t_max());
  const double t1 = t_end.value_or(schedule.t_min());
  if (!schedule.contains(t0) || !schedule.contains(t1) || !(t0 > t1)) {
    throw DomainError("build_grid: need t_min <= t_end < t_start <= t_max");
  }
  const auto n = static_cast<std::size_t>(steps);
  SamplingGrid g;
  g.t.resize(n + 1);
  g.rho.resize(n + 1);
  const double rho0 = schedule.rho(t0);
  const double rho1 = schedule.rho(t1);
  for (std::size_t k = 0; k <= n; ++k) {
    const double frac = static_cast<double>(k) / static_cast<double>(n);
    double t = k == 0 ? t0 : t1;
    if (k > 0 && k < n) {
      switch (kind) {
        case GridKind::uniform_t:
          t = t0 - static_cast<double>(k) * (t0 - t1) / static_cast<double>(n);
          break;
        case GridKind::uniform_rho:
          t = schedule.invert_rho(rho0 + (rho1 - rho0) * frac);
          break;
        case GridKind::log_uniform_rho:
          t = schedule.invert_rho(std::exp(std::log(rho0) + (std::log(rho1) - std::log(rho0)) * frac));
          break;
      }
    }
    g.t[k] = t;
    g.rho[k] = schedule.rho(t);
  }
  if (terminal_merge) {
    g.t.erase(g.t.end() - 2);
    g.rho.erase(g.rho.end() - 2);
    g.merged_terminal = true;
  }
  for (std::size_t k = 0; k + 1 < g.rho.size(); ++k) {
    const double step = g.rho[k + 1] - g.rho[k];
    if (!(step < 0.0)) {
      throw ScheduleViolation("build_grid: induced rho not strictly decreasing at node " + std::to_string(k + 1));
    }
    g.h.push_back(step);
  }
  return g;
}

/**
 * Multistep integrator of dy/drho = eps on a fixed rho-grid, advanced one node
 * at a time by submitting the field value at the current node.
 */
class RhoStepper {
 public:
  RhoStepper(std::vector<double> rho_nodes, State y0, Solver solver, GammaPolicy gamma)
      : rho_(std::move(rho_nodes)), y_(std::move(y0)), solver_(solver), gamma_(gamma) {
    if (rho_.size() < 3) throw ArgumentError("RhoStepper: at least 3 nodes are required");
    if (y_.empty()) throw ArgumentError("RhoStepper: empty initial state");
    if (!all_finite(y_)) throw ArgumentError("RhoStepper: non-finite initial state");
    if (!all_finite(rho_)) throw ArgumentError("RhoStepper: non-finite rho node");
    const double dir = rho_[1] - rho_[0];
    for (std::size_t k = 0; k + 1 < rho_.size(); ++k) {
      const double h = rho_[k + 1] - rho_[k];
      if (!(h * dir > 0.0)) throw GeometryError("RhoStepper: rho nodes must be strictly monotone");
    }
    gamma_.validate();
  }

  [[nodiscard]] std::size_t cursor() const noexcept { return cursor_; }
  [[nodiscard]] std::size_t nodes() const noexcept { return rho_.size(); }
  [[nodiscard]] bool done() const noexcept { return cursor_ + 1 == rho_.size(); }
  [[nodiscard]] const State& state() const noexcept { return y_; }
  [[nodiscard]] double rho() const noexcept { return rho_[cursor_]; }
  [[nodiscard]] std::span<const double> rho_nodes() const noexcept { return rho_; }
  [[nodiscard]] std::size_t evaluations() const noexcept { return evaluations_; }
  [[nodiscard]] std::size_t ratio_warnings() const noexcept { return ratio_warnings_; }
  [[nodiscard]] Solver solver() const noexcept { return solver_; }

  /// Replaces the state at the current node before its field value is submitted.
  void overwrite_state(State y) {
    require_dimension(y, y_.size(), "RhoStepper::overwrite_state");
    y_ = std::move(y);
  }

  /// Consumes eps at the current node and moves to the next one.
  const State& advance(State eps) {
    if (done()) throw StateError("RhoStepper: trajectory already complete");
    require_dimension(eps, y_.size(), "RhoStepper::advance");
    const std::size_t i = cursor_;
    if (!all_finite(eps)) throw DivergenceError(i, "non-finite field value");
    ++evaluations_;
    history_.push(std::move(eps));

    StepGeometry g;
    g.h = rho_[i + 1] - rho_[i];
    if (i >= 1) g.h_prev = rho_[i] - rho_[i - 1];
    if (i >= 2) g.h_prev2 = rho_[i - 1] - rho_[i - 2];

    State next;
    if (i == 0 || solver_ == Solver::euler) {
      const State& e0 = history_[0];
      next.resize(y_.size());
      for (std::size_t k = 0; k < y_.size(); ++k) next[k] = y_[k] + g.h * e0[k];
    } else if (i == 1) {
      if (g.ratio_out_of_range()) ++ratio_warnings_;
      next = cab_update(2, y_, history_, g, 0.0);
    } else {
      if (g.ratio_out_of_range()) ++ratio_warnings_;
      const double gamma = solver_corrected(solver_) ? gamma_.at(g.h) : 0.0;
      next = cab_update(solver_order(solver_), y_, history_, g, gamma);
    }
    if (!all_finite(next)) throw DivergenceError(i, "non-finite state");
    y_ = std::move(next);
    ++cursor_;
    return y_;
  }

 private:
  std::vector<double> rho_;
  State y_;
  Solver solver_;
  GammaPolicy gamma_;
  EpsilonRing history_;
  std::size_t cursor_ = 0;
  std::size_t evaluations_ = 0;
  std::size_t ratio_warnings_ = 0;
};

struct SamplerConfig {
  Solver solver = Solver::cab2;
  GammaPolicy gamma = GammaPolicy::constant(0.75);
  GridKind grid = GridKind::uniform_t;
  int steps = 10;
  bool terminal_merge = true;

  void validate() const {
    if (steps < 3) throw ArgumentError("sampler: N=" + std::to_string(steps) + " but N >= 3 is required");
    gamma.validate();
  }
};

[[nodiscard]] inline SamplingGrid build_grid(const Schedule& schedule, const SamplerConfig& cfg) {
  cfg.validate();
  return build_grid(schedule, cfg.grid, cfg.steps, cfg.terminal_merge);
}

struct TrajectoryNode {
  std::size_t index = 0;
  double t = 0.0;
  double rho = 0.0;
  State y;
  State x;
  std::optional<State> eps;
};

struct Trajectory {
  std::vector<TrajectoryNode> nodes;
  std::size_t nfe_count = 0;
  std::size_t ratio_warnings = 0;

  [[nodiscard]] const TrajectoryNode& final_node() const { return nodes.back(); }
};

/**
 * Runs CAB-p over the grid starting from x_init at grid.t[0]. The model is
 * called at every node except the last, in original coordinates x = s y.
 */
[[nodiscard]] inline Trajectory sample(const RectifiedField& field, const SamplerConfig& config,
                                       const SamplingGrid& grid, const State& x_init) {
  config.gamma.validate();
  if (grid.nodes() < 3 || grid.t.size() != grid.nodes()) {
    throw ArgumentError("sample: grid needs at least 3 timed nodes");
  }
  require_dimension(x_init, field.dimension(), "sample: x_init");
  if (!all_finite(x_init)) throw ArgumentError("sample: non-finite x_init");

  const Schedule& schedule = field.schedule();
  const SchedulePoint q0 = schedule.eval(grid.t[0]);
  RhoStepper stepper(grid.rho, scaled(x_init, 1.0 / q0.s), config.solver, config.gamma);

  Trajectory traj;
  traj.nodes.reserve(grid.nodes());
  for (std::size_t i = 0; i < grid.nodes(); ++i) {
    TrajectoryNode node;
    node.index = i;
    node.t = grid.t[i];
    node.rho = grid.rho[i];
    node.y = stepper.state();
    node.x = i == 0 ? x_init : scaled(node.y, schedule.eval(node.t).s);
    if (!stepper.done()) {
      State eps;
      try {
        eps = field.eval_at(node.y, node.rho, node.t);
      } catch (const NumericError& e) {
        throw DivergenceError(i, e.what());
      }
      node.eps = eps;
      stepper.advance(std::move(eps));
    }
    traj.nodes.push_back(std::move(node));
  }
  traj.nfe_count = stepper.evaluations();
  traj.ratio_warnings = stepper.ratio_warnings();
  return traj;
}

/// Reference solution of the un-rectified reverse ODE in (x, t) at every grid time.
[[nodiscard]] inline Trajectory sample_reverse_ode(const ModelField& model, const Schedule& schedule,
                                                   const SamplingGrid& grid, const State& x_init, double tol) {
  require_dimension(x_init, model.dimension(), "sample_reverse_ode: x_init");
  if (grid.t.size() < 2) throw ArgumentError("sample_reverse_ode: grid needs timed nodes");
  oracle::OracleConfig cfg;
  cfg.rtol = tol;
  cfg.atol = std::max(1e-16, tol * 1e-2);
  auto rhs = [&](const State& x, double t) { return reverse_ode_rhs(model, schedule, x, t); };
  const oracle::OracleResult res = oracle::integrate(rhs, grid.t.front(), grid.t.back(), x_init, cfg, grid.t);
  Trajectory traj;
  for (std::size_t i = 0; i < grid.t.size(); ++i) {
    TrajectoryNode node;
    node.index = i;
    node.t = grid.t[i];
    node.rho = grid.rho.empty() ? schedule.rho(node.t) : grid.rho[i];
    node.x = res.states[i];
    node.y = scaled(node.x, 1.0 / schedule.eval(node.t).s);
    traj.nodes.push_back(std::move(node));
  }
  traj.nfe_count = res.stats.rhs_evals;
  return traj;
}

/// Reference solution of the rectified ODE dy/drho = eps(y, rho) at every grid node.
[[nodiscard]] inline Trajectory sample_rectified_reference(const RectifiedField& field, const SamplingGrid& grid,
                                                           const State& x_init, double tol) {
  require_dimension(x_init, field.dimension(), "sample_rectified_reference: x_init");
  const Schedule& schedule = field.schedule();
  oracle::OracleConfig cfg;
  cfg.rtol = tol;
  cfg.atol = std::max(1e-16, tol * 1e-2);
  const State y0 = scaled(x_init, 1.0 / schedule.eval(grid.t.front()).s);
  auto rhs = [&](const State& y, double rho) { return field(y, rho); };
  const oracle::OracleResult res =
      oracle::integrate(rhs, grid.rho.front(), grid.rho.back(), y0, cfg, grid.rho);
  Trajectory traj;
  for (std::size_t i = 0; i < grid.rho.size(); ++i) {
    TrajectoryNode node;
    node.index = i;
    node.t = grid.t[i];
    node.rho = grid.rho[i];
    node.y = res.states[i];
    node.x = scaled(node.y, schedule.eval(node.t).s);
    traj.nodes.push_back(std::move(node));
  }
  traj.nfe_count = res.stats.rhs_evals;
  return traj;
}

/// Formats a double with 17 significant digits.
[[nodiscard]] inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

/// CSV with header step,t,rho,y_0..y_{d-1},x_0..x_{d-1}; comment lines come first, prefixed "# ".
inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                                 std::span<const std::string> comments = {}) {
  for (const std::string& c : comments) out << "# " << c << '\n';
  const std::size_t dim = traj.nodes.empty() ? 0 : traj.nodes.front().y.size();
  out << "step,t,rho";
  for (std::size_t k = 0; k < dim; ++k) out << ",y_" << k;
  for (std::size_t k = 0; k < dim; ++k) out << ",x_" << k;
  out << '\n';
  for (const TrajectoryNode& n : traj.nodes) {
    out << n.index << ',' << format_double(n.t) << ',' << format_double(n.rho);
    for (double v : n.y) out << ',' << format_double(v);
    for (double v : n.x) out << ',' << format_double(v);
    out << '\n';
  }
}

}  // namespace cab
