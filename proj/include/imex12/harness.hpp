#pragma once

// Experiment runner behind the imex12 CLI: configuration, the three sweep
// protocols, and CSV emission.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "imex12/diagnostics.hpp"
#include "imex12/problems.hpp"
#include "imex12/spectral2d.hpp"
#include "imex12/timestepper.hpp"

namespace imex12::harness {

/// Bad flags, bad config lines, or an incompatible method/experiment pairing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// --help was given; what() holds the help text.
class HelpRequested : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { single_run, convergence_sweep, tolerance_sweep, adaptive_vs_nonadaptive };

[[nodiscard]] constexpr std::string_view experiment_name(Experiment e) {
  switch (e) {
    case Experiment::single_run: return "single_run";
    case Experiment::convergence_sweep: return "convergence_sweep";
    case Experiment::tolerance_sweep: return "tolerance_sweep";
    case Experiment::adaptive_vs_nonadaptive: return "adaptive_vs_nonadaptive";
  }
  return "?";
}

inline const std::vector<double> kDefaultDtList = {1.0 / 10, 1.0 / 20, 1.0 / 40, 1.0 / 80, 1.0 / 160};
inline const std::vector<double> kDefaultTolList = {1e-2, 1e-3, 1e-4, 1e-5, 1e-6};
inline constexpr double kDefaultAdaptiveDt0 = 1e-3;
inline constexpr double kDefaultConstantDt = 1.0 / 40;

struct ExperimentConfig {
  Experiment experiment = Experiment::single_run;
  std::string problem = "taylor-green";
  /// Empty = the experiment's default method set.
  std::optional<MethodId> method;
  std::optional<double> dt;
  std::vector<double> dt_list = kDefaultDtList;
  std::optional<double> tol;
  std::vector<double> tol_list = kDefaultTolList;
  std::optional<double> nu;
  std::optional<double> final_time;
  int n_modes = 32;
  ControllerConfig controller;
  std::string out = "imex12_out";
  std::uint64_t seed = 0;

  /// Methods the experiment will run, after defaults are applied.
  [[nodiscard]] std::vector<MethodId> methods() const {
    if (method) {
      return {*method};
    }
    switch (experiment) {
      case Experiment::single_run: return {MethodId::moose_imex_12};
      case Experiment::convergence_sweep: return {MethodId::be_fe, MethodId::be_ab2, MethodId::be_ab2_f};
      case Experiment::tolerance_sweep:
        return {MethodId::moose_imex_12, MethodId::vss_be_ab2, MethodId::vss_be_ab2_f};
      case Experiment::adaptive_vs_nonadaptive: return {MethodId::moose_imex_12};
    }
    return {};
  }

  [[nodiscard]] problems::ProblemSpec problem_spec() const {
    return problems::problem_by_name(problem, nu, final_time);
  }

  void validate() const {
    auto positive = [](double v) { return v > 0.0; };
    if (dt && !positive(*dt)) {
      throw UsageError("--dt must be positive");
    }
    if (tol && !positive(*tol)) {
      throw UsageError("--tol must be positive");
    }
    if (dt_list.empty() || !std::all_of(dt_list.begin(), dt_list.end(), positive)) {
      throw UsageError("--dt-list must be a nonempty list of positive values");
    }
    if (tol_list.empty() || !std::all_of(tol_list.begin(), tol_list.end(), positive)) {
      throw UsageError("--tol-list must be a nonempty list of positive values");
    }
    if ((nu && !positive(*nu)) || (final_time && !positive(*final_time))) {
      throw UsageError("--nu and --T must be positive");
    }
    if (n_modes < 8 || n_modes % 2 != 0) {
      throw UsageError("--modes must be even and >= 8");
    }
    if (problem != "taylor-green" && problem != "transient") {
      throw UsageError("unknown problem '" + problem + "'");
    }
    try {
      controller.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    if (method) {
      const bool adaptive = is_adaptive(*method);
      if (experiment == Experiment::convergence_sweep && adaptive) {
        throw UsageError("convergence_sweep needs a constant-step method, got " + std::string(method_name(*method)));
      }
      if ((experiment == Experiment::tolerance_sweep || experiment == Experiment::adaptive_vs_nonadaptive) &&
          !adaptive) {
        throw UsageError(std::string(experiment_name(experiment)) + " needs an adaptive method, got " +
                         std::string(method_name(*method)));
      }
    }
  }
};

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Accepts plain numbers and fractions such as "1/40".
inline double parse_number(const std::string& raw, const std::string& key) {
  const std::string s = trim(raw);
  try {
    const auto slash = s.find('/');
    std::size_t used = 0;
    if (slash != std::string::npos) {
      const std::string num = s.substr(0, slash);
      const std::string den = s.substr(slash + 1);
      std::size_t u2 = 0;
      const double a = std::stod(num, &used);
      const double b = std::stod(den, &u2);
      if (used != num.size() || u2 != den.size() || b == 0.0) {
        throw std::invalid_argument(s);
      }
      return a / b;
    }
    const double v = std::stod(s, &used);
    if (used != s.size()) {
      throw std::invalid_argument(s);
    }
    return v;
  } catch (const std::exception&) {
    throw UsageError("bad numeric value '" + raw + "' for " + key);
  }
}

inline std::vector<double> parse_list(const std::string& raw, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!trim(item).empty()) {
      out.push_back(parse_number(item, key));
    }
  }
  if (out.empty()) {
    throw UsageError("empty list for " + key);
  }
  return out;
}

inline Experiment parse_experiment(const std::string& s) {
  for (auto e : {Experiment::single_run, Experiment::convergence_sweep, Experiment::tolerance_sweep,
                 Experiment::adaptive_vs_nonadaptive}) {
    if (experiment_name(e) == s) {
      return e;
    }
  }
  throw UsageError("unknown experiment '" + s + "'");
}

inline std::string normalize_key(std::string key) {
  key = trim(key);
  while (!key.empty() && key.front() == '-') {
    key.erase(key.begin());
  }
  std::replace(key.begin(), key.end(), '_', '-');
  return key;
}

}  // namespace detail

/// Applies one setting by its flag name (without dashes; '_' and '-' are
/// interchangeable).
inline void apply_setting(ExperimentConfig& cfg, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = detail::normalize_key(raw_key);
  const std::string value = detail::trim(raw_value);
  if (key == "experiment") {
    cfg.experiment = detail::parse_experiment(value);
  } else if (key == "problem") {
    cfg.problem = value;
  } else if (key == "method") {
    try {
      cfg.method = parse_method(value);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  } else if (key == "dt") {
    cfg.dt = detail::parse_number(value, key);
  } else if (key == "dt-list") {
    cfg.dt_list = detail::parse_list(value, key);
  } else if (key == "tol") {
    cfg.tol = detail::parse_number(value, key);
  } else if (key == "tol-list") {
    cfg.tol_list = detail::parse_list(value, key);
  } else if (key == "nu") {
    cfg.nu = detail::parse_number(value, key);
  } else if (key == "T") {
    cfg.final_time = detail::parse_number(value, key);
  } else if (key == "modes") {
    const double m = detail::parse_number(value, key);
    if (m != static_cast<int>(m)) {
      throw UsageError("--modes must be an integer");
    }
    cfg.n_modes = static_cast<int>(m);
  } else if (key == "gamma") {
    cfg.controller.gamma = detail::parse_number(value, key);
  } else if (key == "gamma-reject") {
    cfg.controller.gamma_reject = detail::parse_number(value, key);
  } else if (key == "est2-mode") {
    if (value == "difference") {
      cfg.controller.est2_mode = Est2Mode::difference;
    } else if (value == "residual") {
      cfg.controller.est2_mode = Est2Mode::residual;
    } else {
      throw UsageError("unknown est2 mode '" + value + "'");
    }
  } else if (key == "out") {
    cfg.out = value;
  } else if (key == "seed") {
    const double s = detail::parse_number(value, key);
    if (s < 0 || s != static_cast<double>(static_cast<std::uint64_t>(s))) {
      throw UsageError("--seed must be a nonnegative integer");
    }
    cfg.seed = static_cast<std::uint64_t>(s);
  } else {
    throw UsageError("unknown setting '" + raw_key + "'");
  }
}

/// Reads `key = value` lines; '#' starts a comment.
[[nodiscard]] inline std::vector<std::pair<std::string, std::string>> read_config_lines(std::istream& in) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    if (detail::trim(line).empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    out.emplace_back(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return out;
}

[[nodiscard]] inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw UsageError("cannot read config file '" + path + "'");
  }
  ExperimentConfig cfg;
  for (const auto& [k, v] : read_config_lines(in)) {
    apply_setting(cfg, k, v);
  }
  return cfg;
}

/// Parses argv-style arguments (without the program name). Config-file
/// settings are applied first; explicit flags win.
[[nodiscard]] inline ExperimentConfig parse_cli(const std::vector<std::string>& args) {
  CLI::App app{"imex12: adaptive IMEX time stepping experiments for 2D periodic Navier-Stokes", "imex12"};
  app.allow_extras(false);

  // Flag name -> raw string; only flags actually given are applied.
  const std::vector<std::pair<std::string, std::string>> flags = {
      {"--experiment", "single_run | convergence_sweep | tolerance_sweep | adaptive_vs_nonadaptive"},
      {"--problem", "taylor-green | transient"},
      {"--method", "be-fe | be-ab2 | be-ab2-f | vss-be-ab2 | vss-be-ab2-f | moose12"},
      {"--dt", "step size (constant-step) or initial step (adaptive); fractions like 1/40 allowed"},
      {"--dt-list", "comma-separated step sizes for convergence_sweep"},
      {"--tol", "controller tolerance for single_run"},
      {"--tol-list", "comma-separated tolerances for the adaptive sweeps"},
      {"--nu", "kinematic viscosity"},
      {"--T", "final time"},
      {"--modes", "Fourier modes per direction (even, >= 8)"},
      {"--gamma", "accept safety factor"},
      {"--gamma-reject", "reject safety factor"},
      {"--est2-mode", "difference | residual"},
      {"--out", "output directory"},
      {"--seed", "seed recorded with the run"},
  };
  std::vector<std::string> values(flags.size());
  std::vector<CLI::Option*> opts;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    opts.push_back(app.add_option(flags[i].first, values[i], flags[i].second));
  }
  std::string config_path;
  app.add_option("--config", config_path, "key = value config file; flags take precedence");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequested(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
  for (std::size_t i = 0; i < flags.size(); ++i) {
    if (opts[i]->count() > 0) {
      apply_setting(cfg, flags[i].first, values[i]);
    }
  }
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// CSV

namespace detail {

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

inline constexpr std::string_view kStepCsvHeader =
    "t,dt,omega,decision,order_used,est1,est2,vel_err,pres_err,energy_lhs_inc,energy_rhs_inc,stability_monitor,"
    "solves_cumulative";

[[nodiscard]] inline std::string step_csv(const diagnostics::Trajectory& traj) {
  using detail::fmt;
  std::ostringstream os;
  os << kStepCsvHeader << '\n';
  for (const auto& r : traj.records) {
    os << fmt(r.t) << ',' << fmt(r.dt) << ',' << fmt(r.omega) << ',' << decision_name(r.decision) << ','
       << (r.order_used == 0 ? std::string("none") : std::to_string(r.order_used)) << ',' << fmt(r.est1) << ','
       << fmt(r.est2) << ',' << fmt(r.vel_err_l2) << ',' << fmt(r.pres_err_l2) << ','
       << fmt(r.energy_lhs_increment) << ',' << fmt(r.energy_rhs_increment) << ',' << fmt(r.stability_monitor)
       << ',' << r.solves_cumulative << '\n';
  }
  return os.str();
}

/// Write-then-rename so readers never see a partial file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) {
      throw std::runtime_error("cannot write " + tmp.string());
    }
    os << content;
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Experiments

using Backend = spectral::SpectralBackend;
using Result = RunResult<Backend::Velocity, Backend::Pressure>;

/// Summary of one run; errors are NaN when the run aborted.
struct RunSummary {
  MethodId method = MethodId::be_ab2_f;
  double control = 0.0;  // dt for constant-step runs, tol for adaptive ones
  double vel_err = diagnostics::kNaN;
  double pres_err = diagnostics::kNaN;
  RunStats stats;
  double energy_lhs = diagnostics::kNaN;
  double energy_rhs = diagnostics::kNaN;
  std::string status = "ok";
  diagnostics::Trajectory trajectory;
  std::vector<NormSample> norm_history;
  bool aborted = false;

  [[nodiscard]] bool ok() const { return !aborted; }
};

[[nodiscard]] inline RunSummary summarize(MethodId method, double control, Result&& r, bool has_exact) {
  RunSummary s;
  s.method = method;
  s.control = control;
  s.stats = r.stats;
  if (has_exact) {
    s.vel_err = diagnostics::relative_l2_l2_error(r.trajectory.records, diagnostics::ErrorField::velocity);
    s.pres_err = diagnostics::relative_l2_l2_error(r.trajectory.records, diagnostics::ErrorField::pressure);
  }
  const auto budget = diagnostics::energy_budget(r.trajectory);
  s.energy_lhs = budget.lhs;
  s.energy_rhs = budget.rhs;
  s.trajectory = std::move(r.trajectory);
  s.norm_history = std::move(r.norm_history);
  return s;
}

/// One run, with numerical aborts turned into an annotated summary.
[[nodiscard]] inline RunSummary run_point(const ExperimentConfig& cfg, MethodId method, double dt0, double tol,
                                          bool record_norms = false) {
  const auto problem = cfg.problem_spec();
  const Backend backend(cfg.n_modes);
  ControllerConfig cc = cfg.controller;
  cc.tol = tol;
  RunOptions opts;
  opts.record_norm_history = record_norms;
  const double control = is_adaptive(method) ? tol : dt0;
  try {
    return summarize(method, control, run(problem, method, cc, dt0, backend, opts), problem.has_exact());
  } catch (const IntegrationAbort& e) {
    RunSummary s;
    s.method = method;
    s.control = control;
    s.status = std::string("aborted: ") + e.what();
    s.aborted = true;
    return s;
  }
}

/// Runs independent jobs concurrently and returns results in job order.
template <class Job>
[[nodiscard]] auto parallel_map(const std::vector<Job>& jobs) {
  using R = decltype(jobs.front()());
  std::vector<std::future<R>> futures;
  futures.reserve(jobs.size());
  for (const auto& j : jobs) {
    futures.push_back(std::async(std::launch::async, j));
  }
  std::vector<R> out;
  out.reserve(jobs.size());
  for (auto& f : futures) {
    out.push_back(f.get());
  }
  return out;
}

[[nodiscard]] inline std::string file_tag(MethodId m, std::string_view what, std::size_t i) {
  return std::string(method_name(m)) + "_" + std::string(what) + std::to_string(i);
}

struct ConvergenceSweepResult {
  struct MethodRows {
    MethodId method;
    std::vector<RunSummary> points;
    diagnostics::ConvergenceTable velocity;
    diagnostics::ConvergenceTable pressure;
  };
  std::vector<MethodRows> methods;
  bool any_aborted = false;
};

/// Constant-step error vs dt for each method, with fitted rates.
[[nodiscard]] inline ConvergenceSweepResult run_convergence_sweep(const ExperimentConfig& cfg,
                                                                  bool write_files = true) {
  ConvergenceSweepResult res;
  for (MethodId m : cfg.methods()) {
    std::vector<std::function<RunSummary()>> jobs;
    for (double dt : cfg.dt_list) {
      jobs.emplace_back([&cfg, m, dt] { return run_point(cfg, m, dt, cfg.controller.tol); });
    }
    ConvergenceSweepResult::MethodRows rows{m, parallel_map(jobs), {}, {}};
    for (const auto& p : rows.points) {
      if (p.ok()) {
        rows.velocity.rows.push_back({p.control, p.vel_err});
        rows.pressure.rows.push_back({p.control, p.pres_err});
      } else {
        res.any_aborted = true;
      }
    }
    if (rows.velocity.rows.size() >= 3) {
      diagnostics::fit(rows.velocity);
      diagnostics::fit(rows.pressure);
    }
    res.methods.push_back(std::move(rows));
  }

  if (write_files) {
    using detail::fmt;
    const std::filesystem::path dir(cfg.out);
    std::ostringstream summary;
    summary << "method,dt,vel_err,pres_err,accepted,stokes_solves,status\n";
    std::ostringstream rates;
    rates << "method,vel_rate,vel_fit_residual,pres_rate,pres_fit_residual\n";
    for (const auto& mr : res.methods) {
      for (std::size_t i = 0; i < mr.points.size(); ++i) {
        const auto& p = mr.points[i];
        summary << method_name(mr.method) << ',' << fmt(p.control) << ',' << fmt(p.vel_err) << ','
                << fmt(p.pres_err) << ',' << p.stats.accepted << ',' << p.stats.stokes_solves << ',' << p.status
                << '\n';
        if (p.ok()) {
          write_atomic(dir / ("steps_" + file_tag(mr.method, "dt", i) + ".csv"), step_csv(p.trajectory));
        }
      }
      rates << method_name(mr.method) << ',' << fmt(mr.velocity.fitted_rate) << ','
            << fmt(mr.velocity.fit_residual) << ',' << fmt(mr.pressure.fitted_rate) << ','
            << fmt(mr.pressure.fit_residual) << '\n';
    }
    write_atomic(dir / "summary.csv", summary.str());
    write_atomic(dir / "rates.csv", rates.str());
  }
  return res;
}

struct ToleranceSweepResult {
  struct MethodRows {
    MethodId method;
    std::vector<RunSummary> points;  // one per tolerance, in tol_list order
  };
  std::vector<MethodRows> methods;
  bool any_aborted = false;
};

[[nodiscard]] inline double adaptive_dt0(const ExperimentConfig& cfg) { return cfg.dt.value_or(kDefaultAdaptiveDt0); }

/// Error and Stokes-solve count per tolerance for each adaptive method.
[[nodiscard]] inline ToleranceSweepResult run_tolerance_sweep(const ExperimentConfig& cfg, bool write_files = true) {
  ToleranceSweepResult res;
  const double dt0 = adaptive_dt0(cfg);
  for (MethodId m : cfg.methods()) {
    std::vector<std::function<RunSummary()>> jobs;
    for (double tol : cfg.tol_list) {
      jobs.emplace_back([&cfg, m, dt0, tol] { return run_point(cfg, m, dt0, tol); });
    }
    ToleranceSweepResult::MethodRows rows{m, parallel_map(jobs)};
    for (const auto& p : rows.points) {
      res.any_aborted = res.any_aborted || p.aborted;
    }
    res.methods.push_back(std::move(rows));
  }

  if (write_files) {
    using detail::fmt;
    const std::filesystem::path dir(cfg.out);
    std::ostringstream summary;
    summary << "method,tol,stokes_solves,accepted,rejected,vel_err,pres_err,status\n";
    for (const auto& mr : res.methods) {
      for (std::size_t i = 0; i < mr.points.size(); ++i) {
        const auto& p = mr.points[i];
        summary << method_name(mr.method) << ',' << fmt(p.control) << ',' << p.stats.stokes_solves << ','
                << p.stats.accepted << ',' << p.stats.rejected << ',' << fmt(p.vel_err) << ',' << fmt(p.pres_err)
                << ',' << p.status << '\n';
        if (p.ok()) {
          write_atomic(dir / ("steps_" + file_tag(mr.method, "tol", i) + ".csv"), step_csv(p.trajectory));
        }
      }
    }
    write_atomic(dir / "summary.csv", summary.str());
  }
  return res;
}

struct PairedRow {
  double tol = 0.0;
  long long stokes_solves = 0;
  double dt_effective = diagnostics::kNaN;
  RunSummary adaptive;
  RunSummary nonadaptive;

  /// nonadaptive / adaptive velocity error.
  [[nodiscard]] double error_ratio() const { return nonadaptive.vel_err / adaptive.vel_err; }
};

struct PairedResult {
  std::vector<PairedRow> rows;
  bool any_aborted = false;
};

/// For each tolerance: the adaptive run, then constant-step BE-AB2+F at the
/// matched effective step T / (Stokes solves).
[[nodiscard]] inline PairedResult run_adaptive_vs_nonadaptive(const ExperimentConfig& cfg, bool write_files = true) {
  const MethodId adaptive_method = cfg.methods().front();
  const double dt0 = adaptive_dt0(cfg);
  const double T = cfg.problem_spec().final_time;

  std::vector<std::function<PairedRow()>> jobs;
  for (double tol : cfg.tol_list) {
    jobs.emplace_back([&cfg, adaptive_method, dt0, tol, T] {
      PairedRow row;
      row.tol = tol;
      row.adaptive = run_point(cfg, adaptive_method, dt0, tol, /*record_norms=*/true);
      if (row.adaptive.aborted) {
        return row;
      }
      row.stokes_solves = row.adaptive.stats.stokes_solves;
      row.dt_effective = T / static_cast<double>(row.stokes_solves);
      row.nonadaptive = run_point(cfg, MethodId::be_ab2_f, row.dt_effective, tol, /*record_norms=*/true);
      return row;
    });
  }
  PairedResult res{parallel_map(jobs), false};
  for (const auto& r : res.rows) {
    res.any_aborted = res.any_aborted || r.adaptive.aborted || r.nonadaptive.aborted;
  }

  if (write_files) {
    using detail::fmt;
    const std::filesystem::path dir(cfg.out);
    std::ostringstream summary;
    summary << "tol,stokes_solves,dt_effective,adaptive_vel_err,nonadaptive_vel_err,error_ratio,adaptive_pres_err,"
               "nonadaptive_pres_err,status\n";
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
      const auto& r = res.rows[i];
      const std::string status = r.adaptive.aborted ? r.adaptive.status
                                 : r.nonadaptive.aborted ? r.nonadaptive.status
                                                         : std::string("ok");
      summary << fmt(r.tol) << ',' << r.stokes_solves << ',' << fmt(r.dt_effective) << ',' << fmt(r.adaptive.vel_err)
              << ',' << fmt(r.nonadaptive.vel_err) << ',' << fmt(r.error_ratio()) << ','
              << fmt(r.adaptive.pres_err) << ',' << fmt(r.nonadaptive.pres_err) << ',' << status << '\n';
      for (const auto* s : {&r.adaptive, &r.nonadaptive}) {
        if (!s->ok() || s->norm_history.empty()) {
          continue;
        }
        std::ostringstream norms;
        norms << "t,vel_l2,pres_l2\n";
        for (const auto& n : s->norm_history) {
          norms << fmt(n.t) << ',' << fmt(n.velocity_l2) << ',' << fmt(n.pressure_l2) << '\n';
        }
        const std::string kind = s == &r.adaptive ? "adaptive" : "nonadaptive";
        write_atomic(dir / ("norms_" + kind + "_tol" + std::to_string(i) + ".csv"), norms.str());
      }
    }
    write_atomic(dir / "summary.csv", summary.str());
  }
  return res;
}

[[nodiscard]] inline std::string_view energy_regime(MethodId m) {
  // The energy inequality is proven for (VSS) BE-AB2 only.
  return m == MethodId::be_ab2 || m == MethodId::vss_be_ab2 ? "theorem" : "monitor";
}

/// A single run: per-step CSV plus a one-row summary.
[[nodiscard]] inline RunSummary run_single(const ExperimentConfig& cfg, bool write_files = true) {
  const MethodId m = cfg.methods().front();
  const double dt0 = cfg.dt.value_or(is_adaptive(m) ? kDefaultAdaptiveDt0 : kDefaultConstantDt);
  const double tol = cfg.tol.value_or(cfg.controller.tol);
  auto s = run_point(cfg, m, dt0, tol);
  if (write_files) {
    using detail::fmt;
    const std::filesystem::path dir(cfg.out);
    std::ostringstream summary;
    summary << "method,problem,dt0,tol,accepted,rejected,stokes_solves,vel_err,pres_err,energy_lhs,energy_rhs,"
               "energy_regime,seed,status\n";
    summary << method_name(m) << ',' << cfg.problem << ',' << fmt(dt0) << ',' << fmt(tol) << ','
            << s.stats.accepted << ',' << s.stats.rejected << ',' << s.stats.stokes_solves << ',' << fmt(s.vel_err)
            << ',' << fmt(s.pres_err) << ',' << fmt(s.energy_lhs) << ',' << fmt(s.energy_rhs) << ','
            << energy_regime(m) << ',' << cfg.seed << ',' << s.status << '\n';
    write_atomic(dir / "summary.csv", summary.str());
    if (s.ok()) {
      write_atomic(dir / "steps.csv", step_csv(s.trajectory));
    }
  }
  return s;
}

/// Exit status: 0 success, 2 if any run aborted numerically.
[[nodiscard]] inline int execute(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::single_run: return run_single(cfg).ok() ? 0 : 2;
    case Experiment::convergence_sweep: return run_convergence_sweep(cfg).any_aborted ? 2 : 0;
    case Experiment::tolerance_sweep: return run_tolerance_sweep(cfg).any_aborted ? 2 : 0;
    case Experiment::adaptive_vs_nonadaptive: return run_adaptive_vs_nonadaptive(cfg).any_aborted ? 2 : 0;
  }
  return 1;
}

}  // namespace imex12::harness
