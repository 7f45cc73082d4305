/**
 * @file convergence.hpp
 * @brief Grid-refinement studies, observed-order fits, low-NFE comparisons and
 *        per-interval field-variation reports.
 */
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cab/benchfields.hpp"
#include "cab/errors.hpp"
#include "cab/multistep.hpp"
#include "cab/reference_oracle.hpp"
#include "cab/sampler.hpp"
#include "cab/state.hpp"

namespace cab {

/// A solver together with the corrector weight it runs with.
struct SolverSpec {
  Solver solver = Solver::cab2;
  GammaPolicy gamma = GammaPolicy::constant(0.0);

  /// Solver name, with ":step-scaled" appended for step-scaled gamma.
  [[nodiscard]] std::string label() const {
    std::string out(to_string(solver));
    if (solver_corrected(solver) && gamma.mode == GammaMode::step_scaled) out += ":step-scaled";
    return out;
  }

  /// gamma as actually applied (0 for uncorrected solvers).
  [[nodiscard]] GammaPolicy effective_gamma() const {
    return solver_corrected(solver) ? gamma : GammaPolicy::constant(0.0);
  }
};

struct StudySpec {
  bench::BenchField field = bench::make_field("v1");
  std::vector<SolverSpec> solvers;
  std::vector<int> grid_sizes{16, 32, 64, 128, 256, 512};
  double rho_start = 0.5;
  double rho_end = 0.05;
  State y0;
  /// Take nodes 1 and 2 from the oracle instead of the Euler/AB2 startup.
  bool oracle_seeded_startup = false;

  void validate() const {
    if (solvers.empty()) throw ArgumentError("study: no solvers");
    if (grid_sizes.empty()) throw ArgumentError("study: no grid sizes");
    for (std::size_t k = 0; k < grid_sizes.size(); ++k) {
      if (grid_sizes[k] < 4) throw ArgumentError("study: grid sizes must be >= 4");
      if (k > 0 && grid_sizes[k] <= grid_sizes[k - 1]) {
        throw ArgumentError("study: grid sizes must be sorted ascending");
      }
    }
    if (!std::isfinite(rho_start) || !std::isfinite(rho_end) || rho_start == rho_end) {
      throw ArgumentError("study: degenerate rho span");
    }
    require_dimension(y0, field.dimension(), "study y0");
    for (const SolverSpec& s : solvers) s.gamma.validate();
  }
};

struct StudyCell {
  SolverSpec solver;
  int steps = 0;
  double h_max = 0.0;
  double max_error = 0.0;
  double final_error = 0.0;
  bool diverged = false;
};

struct OrderFit {
  double slope = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

struct SolverFit {
  SolverSpec solver;
  std::optional<OrderFit> fit;
};

struct ConvergenceReport {
  std::vector<StudyCell> cells;
  std::vector<SolverFit> fits;

  [[nodiscard]] const SolverFit& fit_for(const std::string& label) const {
    for (const SolverFit& f : fits) {
      if (f.solver.label() == label) return f;
    }
    throw ArgumentError("report: no solver labelled '" + label + "'");
  }
};

/**
 * Least-squares slope of log(error) against log(h). Points whose error is not
 * positive and finite are dropped; fewer than 3 remaining is an error.
 */
[[nodiscard]] inline OrderFit estimate_order(std::span<const std::pair<double, double>> points) {
  std::vector<std::pair<double, double>> logs;
  for (const auto& [h, e] : points) {
    if (!(h > 0.0) || !std::isfinite(h)) throw ArgumentError("estimate_order: h_max must be positive");
    if (e > 0.0 && std::isfinite(e)) logs.emplace_back(std::log(h), std::log(e));
  }
  if (logs.size() < 3) throw ArgumentError("estimate_order: fewer than 3 usable points");
  const double n = static_cast<double>(logs.size());
  double mx = 0.0;
  double my = 0.0;
  for (const auto& [x, y] : logs) {
    mx += x;
    my += y;
  }
  mx /= n;
  my /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& [x, y] : logs) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
    syy += (y - my) * (y - my);
  }
  if (!(sxx > 0.0)) throw ArgumentError("estimate_order: all h_max values coincide");
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss_res = 0.0;
  for (const auto& [x, y] : logs) {
    const double r = y - (intercept + slope * x);
    ss_res += r * r;
  }
  const double r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return {slope, r2, logs.size()};
}

namespace detail {

struct RunOutcome {
  std::vector<State> states;
  bool diverged = false;
};

inline RunOutcome run_on_grid(const bench::BenchField& field, const SolverSpec& spec, const SamplingGrid& grid,
                              const State& y0, std::span<const State> seeds) {
  RunOutcome out;
  try {
    RhoStepper stepper(grid.rho, y0, spec.solver, spec.effective_gamma());
    out.states.push_back(stepper.state());
    while (!stepper.done()) {
      const std::size_t next = stepper.cursor() + 1;
      stepper.advance(field(stepper.state(), stepper.rho()));
      if (next <= 2 && next < seeds.size()) stepper.overwrite_state(seeds[next]);
      out.states.push_back(stepper.state());
    }
  } catch (const NumericFailure&) {
    out.diverged = true;
  }
  return out;
}

}  // namespace detail

/// Reference states at every node of the grid.
[[nodiscard]] inline std::vector<State> reference_states(const bench::BenchField& field, const SamplingGrid& grid,
                                                         const State& y0, const oracle::OracleConfig& cfg) {
  auto rhs = [&](const State& y, double rho) { return field(y, rho); };
  return oracle::integrate(rhs, grid.rho.front(), grid.rho.back(), y0, cfg, grid.rho).states;
}

[[nodiscard]] inline ConvergenceReport run_study(const StudySpec& spec, const oracle::OracleConfig& oracle_cfg) {
  spec.validate();
  ConvergenceReport report;
  std::vector<std::vector<StudyCell>> per_solver(spec.solvers.size());
  for (int n : spec.grid_sizes) {
    const SamplingGrid grid = uniform_rho_grid(spec.rho_start, spec.rho_end, static_cast<std::size_t>(n));
    const std::vector<State> ref = reference_states(spec.field, grid, spec.y0, oracle_cfg);
    const std::span<const State> seeds =
        spec.oracle_seeded_startup ? std::span<const State>(ref) : std::span<const State>();
    for (std::size_t s = 0; s < spec.solvers.size(); ++s) {
      StudyCell cell;
      cell.solver = spec.solvers[s];
      cell.steps = n;
      cell.h_max = grid.h_max();
      const detail::RunOutcome run = detail::run_on_grid(spec.field, spec.solvers[s], grid, spec.y0, seeds);
      if (run.diverged) {
        cell.diverged = true;
        cell.max_error = std::numeric_limits<double>::infinity();
        cell.final_error = std::numeric_limits<double>::infinity();
      } else {
        for (std::size_t k = 0; k < ref.size(); ++k) {
          cell.max_error = std::max(cell.max_error, distance(run.states[k], ref[k]));
        }
        cell.final_error = distance(run.states.back(), ref.back());
      }
      per_solver[s].push_back(cell);
    }
  }
  for (std::size_t s = 0; s < spec.solvers.size(); ++s) {
    std::vector<std::pair<double, double>> pts;
    for (const StudyCell& c : per_solver[s]) pts.emplace_back(c.h_max, c.max_error);
    SolverFit fit{spec.solvers[s], std::nullopt};
    try {
      fit.fit = estimate_order(pts);
    } catch (const ArgumentError&) {
      fit.fit.reset();
    }
    report.fits.push_back(fit);
    report.cells.insert(report.cells.end(), per_solver[s].begin(), per_solver[s].end());
  }
  return report;
}

/// Rows solver,gamma_mode,gamma,N,h_max,max_err,final_err then "# slope,<label>,<slope>,<r2>" lines.
inline void write_report_csv(std::ostream& out, const ConvergenceReport& report) {
  out << "solver,gamma_mode,gamma,N,h_max,max_err,final_err\n";
  for (const StudyCell& c : report.cells) {
    const GammaPolicy g = c.solver.effective_gamma();
    out << to_string(c.solver.solver) << ',' << to_string(g.mode) << ',' << format_double(g.value) << ','
        << c.steps << ',' << format_double(c.h_max) << ',' << format_double(c.max_error) << ','
        << format_double(c.final_error) << '\n';
  }
  for (const SolverFit& f : report.fits) {
    out << "# slope," << f.solver.label() << ',';
    if (f.fit) {
      out << format_double(f.fit->slope) << ',' << format_double(f.fit->r_squared) << '\n';
    } else {
      out << "nan,nan\n";
    }
  }
}

struct PairComparison {
  SolverSpec baseline;
  SolverSpec corrected;
  std::vector<double> baseline_errors;
  std::vector<double> corrected_errors;

  [[nodiscard]] double baseline_final() const { return baseline_errors.back(); }
  [[nodiscard]] double corrected_final() const { return corrected_errors.back(); }
  [[nodiscard]] bool corrected_wins() const { return corrected_final() < baseline_final(); }
};

struct LowNfeComparison {
  std::vector<double> rho;
  std::vector<PairComparison> pairs;
};

/**
 * Runs each (baseline, corrected) pair on a uniform rho-grid with N intervals
 * using the algorithmic startup and reports the per-node error against the
 * reference trajectory.
 */
[[nodiscard]] inline LowNfeComparison low_nfe_comparison(const bench::BenchField& field,
                                                         std::span<const std::pair<SolverSpec, SolverSpec>> pairs,
                                                         int steps, double rho_start, double rho_end, const State& y0,
                                                         const oracle::OracleConfig& cfg) {
  if (steps < 3) throw ArgumentError("low_nfe_comparison: N >= 3 is required");
  require_dimension(y0, field.dimension(), "low_nfe_comparison y0");
  const SamplingGrid grid = uniform_rho_grid(rho_start, rho_end, static_cast<std::size_t>(steps));
  const std::vector<State> ref = reference_states(field, grid, y0, cfg);
  auto errors = [&](const SolverSpec& spec) {
    const detail::RunOutcome run = detail::run_on_grid(field, spec, grid, y0, {});
    std::vector<double> e(ref.size(), std::numeric_limits<double>::infinity());
    for (std::size_t k = 0; k < run.states.size(); ++k) e[k] = distance(run.states[k], ref[k]);
    return e;
  };
  LowNfeComparison out;
  out.rho = grid.rho;
  for (const auto& [base, corr] : pairs) {
    out.pairs.push_back({base, corr, errors(base), errors(corr)});
  }
  return out;
}

inline void write_comparison_csv(std::ostream& out, const LowNfeComparison& cmp) {
  out << "node,rho";
  for (const PairComparison& p : cmp.pairs) out << ",err_" << p.baseline.label() << ",err_" << p.corrected.label();
  out << '\n';
  for (std::size_t k = 0; k < cmp.rho.size(); ++k) {
    out << k << ',' << format_double(cmp.rho[k]);
    for (const PairComparison& p : cmp.pairs) {
      out << ',' << format_double(p.baseline_errors[k]) << ',' << format_double(p.corrected_errors[k]);
    }
    out << '\n';
  }
  for (const PairComparison& p : cmp.pairs) {
    out << "# final," << p.baseline.label() << ',' << format_double(p.baseline_final()) << ','
        << p.corrected.label() << ',' << format_double(p.corrected_final()) << ','
        << (p.corrected_wins() ? "corrected-lower" : "corrected-not-lower") << '\n';
  }
}

/// Consecutive right-hand-side change per grid interval, in t-space and in rho-space.
struct VariationRow {
  std::size_t interval = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  double rho_start = 0.0;
  double rho_end = 0.0;
  double t_change = 0.0;
  double t_change_per_dt = 0.0;
  double rho_change = 0.0;
  double rho_change_per_drho = 0.0;
};

/**
 * Samples a trajectory with the given config, then compares consecutive values
 * of the un-rectified right-hand side f x + g^2/(2 sigma) eps on the t-grid
 * with consecutive values of the rectified right-hand side eps on the rho-grid.
 */
[[nodiscard]] inline std::vector<VariationRow> field_variation_report(const RectifiedField& field,
                                                                      const SamplingGrid& grid, const State& x_init,
                                                                      const SamplerConfig& config) {
  const Trajectory traj = sample(field, config, grid, x_init);
  const Schedule& schedule = field.schedule();
  std::vector<State> t_rhs;
  std::vector<State> rho_rhs;
  for (const TrajectoryNode& n : traj.nodes) {
    t_rhs.push_back(reverse_ode_rhs(field.model(), schedule, n.x, n.t));
    rho_rhs.push_back(field.eval_at(n.y, n.rho, n.t));
  }
  std::vector<VariationRow> rows;
  for (std::size_t k = 0; k + 1 < traj.nodes.size(); ++k) {
    VariationRow r;
    r.interval = k;
    r.t_start = traj.nodes[k].t;
    r.t_end = traj.nodes[k + 1].t;
    r.rho_start = traj.nodes[k].rho;
    r.rho_end = traj.nodes[k + 1].rho;
    r.t_change = distance(t_rhs[k + 1], t_rhs[k]);
    r.t_change_per_dt = r.t_change / std::abs(r.t_end - r.t_start);
    r.rho_change = distance(rho_rhs[k + 1], rho_rhs[k]);
    r.rho_change_per_drho = r.rho_change / std::abs(r.rho_end - r.rho_start);
    rows.push_back(r);
  }
  return rows;
}

inline void write_variation_csv(std::ostream& out, std::span<const VariationRow> rows) {
  out << "interval,t_start,t_end,rho_start,rho_end,t_change,t_change_per_dt,rho_change,rho_change_per_drho\n";
  for (const VariationRow& r : rows) {
    out << r.interval << ',' << format_double(r.t_start) << ',' << format_double(r.t_end) << ','
        << format_double(r.rho_start) << ',' << format_double(r.rho_end) << ',' << format_double(r.t_change) << ','
        << format_double(r.t_change_per_dt) << ',' << format_double(r.rho_change) << ','
        << format_double(r.rho_change_per_drho) << '\n';
  }
}

}  // namespace cab
