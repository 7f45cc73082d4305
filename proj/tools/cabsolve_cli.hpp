/**
 * @file cabsolve_cli.hpp
 * @brief Argument handling and command dispatch for the cabsolve tool.
 *
 * Settings are merged into one flat JSON object: the --config file first,
 * then every flag given on the command line overwrites its key. Commands read
 * typed values from the merged object, so a config file plus overriding flags
 * behaves exactly like the fully flagged invocation.
 *
 * Exit status: 0 success, 1 domain/config error, 2 numeric divergence.
 */
#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cab/cab.hpp"

namespace cab::cli {

using json = nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitNumeric = 2;

namespace detail {

/// Raw flag storage; one instance shared by all subcommands.
struct Flags {
  std::string config;
  std::string schedule;
  std::vector<std::string> schedule_params;
  std::string solver;
  double gamma = 0.0;
  std::string gamma_mode;
  int steps = 0;
  std::string grid;
  bool no_terminal_merge = false;
  std::string field;
  std::vector<std::string> field_params;
  int dim = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<int> grid_sizes;
  std::vector<std::string> solvers;
  double rho_start = 0.0;
  double rho_end = 0.0;
  bool oracle_seeded = false;
  double rtol = 0.0;
  double gamma3 = 0.0;
};

struct Bound {
  std::string key;
  CLI::Option* option;
  std::function<json()> value;
};

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "schedule", "schedule-param", "solver",   "gamma",      "gamma-mode",           "steps",
      "grid",     "terminal-merge", "field",    "field-param", "dim",                 "seed",
      "out",      "grid-sizes",     "solvers",  "rho-start",  "rho-end",              "oracle-seeded-startup",
      "rtol",     "gamma3"};
  return keys;
}

inline std::map<std::string, double> parse_key_values(const json& settings, const char* key) {
  std::map<std::string, double> out;
  if (!settings.contains(key)) return out;
  for (const auto& item : settings.at(key)) {
    const std::string kv = item.get<std::string>();
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw DomainError(std::string(key) + ": expected k=v, got '" + kv + "'");
    }
    const std::string k = kv.substr(0, eq);
    const std::string v = kv.substr(eq + 1);
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != v.size() || v.empty()) throw DomainError(std::string(key) + ": '" + v + "' is not a number");
    out[k] = value;
  }
  return out;
}

template <class T>
T get_or(const json& s, const char* key, T fallback) {
  if (!s.contains(key)) return fallback;
  try {
    return s.at(key).get<T>();
  } catch (const json::exception&) {
    throw DomainError(std::string("setting '") + key + "' has the wrong type");
  }
}

inline GammaMode parse_gamma_mode(const std::string& s) {
  if (s == "constant") return GammaMode::constant;
  if (s == "step-scaled") return GammaMode::step_scaled;
  throw DomainError("unknown gamma mode '" + s + "' (expected constant or step-scaled)");
}

inline double default_gamma(Solver s) { return s == Solver::cab3 ? 0.25 : 0.75; }

/// Parses "name[:mode[:value]]" study tokens.
inline SolverSpec parse_solver_token(const std::string& token, const json& s) {
  std::vector<std::string> parts;
  std::stringstream ss(token);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.empty() || parts.size() > 3) throw DomainError("bad solver token '" + token + "'");
  SolverSpec spec;
  spec.solver = parse_solver(parts[0]);
  const GammaMode mode =
      parts.size() >= 2 ? parse_gamma_mode(parts[1]) : parse_gamma_mode(get_or<std::string>(s, "gamma-mode", "constant"));
  double value = 0.0;
  if (parts.size() == 3) {
    std::size_t used = 0;
    try {
      value = std::stod(parts[2], &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != parts[2].size()) throw DomainError("bad gamma in solver token '" + token + "'");
  } else if (s.contains("gamma")) {
    value = get_or<double>(s, "gamma", 0.0);
  } else {
    value = mode == GammaMode::step_scaled ? 0.75 : default_gamma(spec.solver);
  }
  spec.gamma = {mode, value};
  spec.effective_gamma().validate();
  spec.gamma.validate();
  return spec;
}

inline SamplerConfig sampler_config(const json& s) {
  SamplerConfig cfg;
  cfg.solver = parse_solver(get_or<std::string>(s, "solver", "cab2"));
  cfg.gamma = {parse_gamma_mode(get_or<std::string>(s, "gamma-mode", "constant")),
               get_or<double>(s, "gamma", default_gamma(cfg.solver))};
  cfg.grid = parse_grid_kind(get_or<std::string>(s, "grid", "uniform-t"));
  cfg.steps = get_or<int>(s, "steps", 10);
  cfg.terminal_merge = get_or<bool>(s, "terminal-merge", true);
  cfg.validate();
  return cfg;
}

/// Model used by run/smoothness: "tanh" or a bench field wrapped as a noise model.
inline ModelField model_for(const json& s, const Schedule& schedule, const char* default_field) {
  const std::string name = get_or<std::string>(s, "field", default_field);
  const auto params = parse_key_values(s, "field-param");
  if (name == "tanh") {
    if (!params.empty()) throw DomainError("field tanh takes no parameters");
    return bench::tanh_noise_model(static_cast<std::size_t>(get_or<int>(s, "dim", 4)));
  }
  const bench::FieldKind kind = bench::parse_field_kind(name);
  int dim = get_or<int>(s, "dim", kind == bench::FieldKind::v1 || kind == bench::FieldKind::v2 ? 2 : 4);
  if (dim <= 0) throw DomainError("--dim must be positive");
  if ((kind == bench::FieldKind::v1 || kind == bench::FieldKind::v2) && dim != 2) {
    throw DomainError("field " + name + " is two-dimensional; --dim must be 2");
  }
  return bench::as_noise_model(bench::BenchField(kind, static_cast<std::size_t>(dim), params), schedule);
}

inline bench::BenchField bench_field_for(const json& s) {
  const std::string name = get_or<std::string>(s, "field", "v1");
  const bench::FieldKind kind = bench::parse_field_kind(name);
  const bool planar = kind == bench::FieldKind::v1 || kind == bench::FieldKind::v2;
  const int dim = get_or<int>(s, "dim", planar ? 2 : 2);
  if (dim <= 0) throw DomainError("--dim must be positive");
  if (planar && dim != 2) throw DomainError("field " + name + " is two-dimensional; --dim must be 2");
  return bench::BenchField(kind, static_cast<std::size_t>(dim), parse_key_values(s, "field-param"));
}

inline oracle::OracleConfig oracle_config(const json& s) {
  oracle::OracleConfig cfg = oracle::OracleConfig::golden();
  cfg.rtol = get_or<double>(s, "rtol", cfg.rtol);
  cfg.validate();
  return cfg;
}

/// Writes to --out when given, else to the provided stream.
inline void emit(const json& s, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (s.contains("out")) {
    const std::string path = s.at("out").get<std::string>();
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DomainError("cannot open output file '" + path + "'");
    body(f);
    if (!f) throw DomainError("failed writing output file '" + path + "'");
  } else {
    body(fallback);
  }
}

inline std::string describe(const SamplerConfig& c) {
  return "solver=" + std::string(to_string(c.solver)) + " gamma_mode=" + std::string(to_string(c.gamma.mode)) +
         " gamma=" + format_double(c.gamma.value) + " grid=" + std::string(to_string(c.grid)) +
         " steps=" + std::to_string(c.steps) + " terminal_merge=" + (c.terminal_merge ? "true" : "false");
}

inline int command_run(const json& s, std::ostream& out, std::ostream& err) {
  const std::string schedule_name = get_or<std::string>(s, "schedule", "rf");
  const Schedule schedule = make_schedule(schedule_name, parse_key_values(s, "schedule-param"));
  const SamplerConfig cfg = sampler_config(s);
  const ModelField model = model_for(s, schedule, "tanh");
  const auto seed = get_or<std::uint64_t>(s, "seed", 0);
  const SamplingGrid grid = build_grid(schedule, cfg);
  const State x_init = standard_normal(model.dimension(), seed);
  const Trajectory traj = sample(RectifiedField(model, schedule), cfg, grid, x_init);
  if (traj.ratio_warnings > 0) {
    err << "warning: " << traj.ratio_warnings << " step ratio(s) outside [0.01, 100]\n";
  }
  const std::vector<std::string> comments = {
      "cabsolve run",
      "schedule=" + schedule_name + " field=" + get_or<std::string>(s, "field", "tanh") +
          " dim=" + std::to_string(model.dimension()),
      describe(cfg),
      std::string("noise=") + kNoiseAlgorithm + " seed=" + std::to_string(seed),
      "nfe=" + std::to_string(traj.nfe_count)};
  emit(s, out, [&](std::ostream& o) { write_trajectory_csv(o, traj, comments); });
  return kExitOk;
}

inline int command_converge(const json& s, std::ostream& out) {
  StudySpec spec;
  spec.field = bench_field_for(s);
  const std::vector<std::string> tokens = get_or<std::vector<std::string>>(
      s, "solvers", {"euler", "ab2", "ab3", "cab2", "cab3", "cab3:step-scaled:0.75"});
  for (const std::string& t : tokens) spec.solvers.push_back(parse_solver_token(t, s));
  spec.grid_sizes = get_or<std::vector<int>>(s, "grid-sizes", {16, 32, 64, 128, 256, 512});
  spec.rho_start = get_or<double>(s, "rho-start", 0.5);
  spec.rho_end = get_or<double>(s, "rho-end", 0.05);
  spec.y0 = spec.field.default_initial_state();
  spec.oracle_seeded_startup = get_or<bool>(s, "oracle-seeded-startup", false);
  try {
    spec.validate();
  } catch (const ArgumentError& e) {
    throw DomainError(e.what());
  }
  const ConvergenceReport report = run_study(spec, oracle_config(s));
  emit(s, out, [&](std::ostream& o) { write_report_csv(o, report); });
  return kExitOk;
}

inline int command_compare(const json& s, std::ostream& out) {
  const bench::BenchField field = bench_field_for(s);
  const int steps = get_or<int>(s, "steps", 8);
  if (steps < 3) throw DomainError("compare: N=" + std::to_string(steps) + " but N >= 3 is required");
  const std::vector<std::pair<SolverSpec, SolverSpec>> pairs = {
      {SolverSpec{Solver::ab2, GammaPolicy::constant(0.0)},
       SolverSpec{Solver::cab2, GammaPolicy::constant(get_or<double>(s, "gamma", 0.75))}},
      {SolverSpec{Solver::ab3, GammaPolicy::constant(0.0)},
       SolverSpec{Solver::cab3, GammaPolicy::constant(get_or<double>(s, "gamma3", 0.25))}}};
  for (const auto& p : pairs) p.second.gamma.validate();
  const LowNfeComparison cmp =
      low_nfe_comparison(field, pairs, steps, get_or<double>(s, "rho-start", 0.5), get_or<double>(s, "rho-end", 0.05),
                         field.default_initial_state(), oracle_config(s));
  emit(s, out, [&](std::ostream& o) { write_comparison_csv(o, cmp); });
  return kExitOk;
}

inline int command_smoothness(const json& s, std::ostream& out) {
  const std::string schedule_name = get_or<std::string>(s, "schedule", "vp");
  const Schedule schedule = make_schedule(schedule_name, parse_key_values(s, "schedule-param"));
  json with_defaults = s;
  if (!with_defaults.contains("steps")) with_defaults["steps"] = 8;
  const SamplerConfig cfg = sampler_config(with_defaults);
  const ModelField model = model_for(s, schedule, "tanh");
  const SamplingGrid grid = build_grid(schedule, cfg);
  const State x_init = standard_normal(model.dimension(), get_or<std::uint64_t>(s, "seed", 0));
  const std::vector<VariationRow> rows = field_variation_report(RectifiedField(model, schedule), grid, x_init, cfg);
  emit(s, out, [&](std::ostream& o) { write_variation_csv(o, rows); });
  return kExitOk;
}

inline void add_common(CLI::App* cmd, Flags& f, std::vector<Bound>& bound) {
  auto bind = [&](const std::string& key, CLI::Option* opt, std::function<json()> value) {
    bound.push_back({key, opt, std::move(value)});
  };
  cmd->add_option("--config", f.config, "JSON settings file (flags override it)");
  bind("schedule", cmd->add_option("--schedule", f.schedule, "vp | ve | rf"), [&f] { return json(f.schedule); });
  bind("schedule-param", cmd->add_option("--schedule-param", f.schedule_params, "k=v (repeatable)"),
       [&f] { return json(f.schedule_params); });
  bind("solver", cmd->add_option("--solver", f.solver, "euler | ab2 | ab3 | cab2 | cab3"),
       [&f] { return json(f.solver); });
  bind("gamma", cmd->add_option("--gamma", f.gamma, "corrector weight"), [&f] { return json(f.gamma); });
  bind("gamma-mode", cmd->add_option("--gamma-mode", f.gamma_mode, "constant | step-scaled"),
       [&f] { return json(f.gamma_mode); });
  bind("steps", cmd->add_option("--steps", f.steps, "number of steps N"), [&f] { return json(f.steps); });
  bind("grid", cmd->add_option("--grid", f.grid, "uniform-t | uniform-rho | log-uniform-rho"),
       [&f] { return json(f.grid); });
  bind("terminal-merge", cmd->add_flag("--no-terminal-merge", f.no_terminal_merge, "keep the last rho-step"),
       [] { return json(false); });
  bind("field", cmd->add_option("--field", f.field, "field name"), [&f] { return json(f.field); });
  bind("field-param", cmd->add_option("--field-param", f.field_params, "k=v (repeatable)"),
       [&f] { return json(f.field_params); });
  bind("dim", cmd->add_option("--dim", f.dim, "state dimension"), [&f] { return json(f.dim); });
  bind("seed", cmd->add_option("--seed", f.seed, "noise seed"), [&f] { return json(f.seed); });
  bind("out", cmd->add_option("--out", f.out, "output CSV path (default stdout)"), [&f] { return json(f.out); });
  bind("rho-start", cmd->add_option("--rho-start", f.rho_start, "study span start"),
       [&f] { return json(f.rho_start); });
  bind("rho-end", cmd->add_option("--rho-end", f.rho_end, "study span end"), [&f] { return json(f.rho_end); });
  bind("rtol", cmd->add_option("--rtol", f.rtol, "reference oracle rtol"), [&f] { return json(f.rtol); });
}

}  // namespace detail

/// Parses argv, runs the selected command and returns the process exit status.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"cabsolve: corrected Adams-Bashforth sampling, convergence studies and reports", "cabsolve"};
  app.require_subcommand(1);
  detail::Flags flags;
  std::vector<detail::Bound> bound;

  CLI::App* run = app.add_subcommand("run", "sample a trajectory and write it as CSV");
  CLI::App* converge = app.add_subcommand("converge", "grid-refinement study with fitted orders");
  CLI::App* compare = app.add_subcommand("compare", "low-NFE AB vs CAB error comparison");
  CLI::App* smooth = app.add_subcommand("smoothness", "per-interval field variation, t-space vs rho-space");
  for (CLI::App* cmd : {run, converge, compare, smooth}) detail::add_common(cmd, flags, bound);
  bound.push_back({"grid-sizes", converge->add_option("--grid-sizes", flags.grid_sizes, "e.g. 16,32,64")->delimiter(','),
                   [&flags] { return json(flags.grid_sizes); }});
  bound.push_back({"solvers", converge->add_option("--solvers", flags.solvers, "name[:mode[:gamma]],...")->delimiter(','),
                   [&flags] { return json(flags.solvers); }});
  bound.push_back({"oracle-seeded-startup",
                   converge->add_flag("--oracle-seeded-startup", flags.oracle_seeded, "take nodes 1-2 from the oracle"),
                   [] { return json(true); }});
  bound.push_back({"gamma3", compare->add_option("--gamma3", flags.gamma3, "cab3 corrector weight"),
                   [&flags] { return json(flags.gamma3); }});

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitConfig;
  }

  try {
    json settings = json::object();
    if (!flags.config.empty()) {
      std::ifstream f(flags.config);
      if (!f) throw DomainError("cannot open config file '" + flags.config + "'");
      settings = json::parse(f);
      if (!settings.is_object()) throw DomainError("config file must hold a JSON object");
      for (const auto& [key, value] : settings.items()) {
        const auto& keys = detail::known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
          throw DomainError("config: unknown key '" + key + "'");
        }
      }
    }
    CLI::App* active = app.get_subcommands().front();
    for (const detail::Bound& b : bound) {
      if (b.option->count() > 0) settings[b.key] = b.value();
    }

    if (active == run) return detail::command_run(settings, out, err);
    if (active == converge) return detail::command_converge(settings, out);
    if (active == compare) return detail::command_compare(settings, out);
    return detail::command_smoothness(settings, out);
  } catch (const NumericFailure& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace cab::cli
