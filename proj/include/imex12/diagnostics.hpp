#pragma once

// Error metrics, energy-budget and step-condition monitors, rate fitting.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "imex12/timestepper/backend.hpp"
#include "imex12/timestepper/controller.hpp"
#include "imex12/timestepper/formulas.hpp"

namespace imex12::diagnostics {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// One controller attempt (accepted or rejected).
struct RunRecord {
  double t = 0.0;  // t^{n+1} of the attempt
  double dt = 0.0;
  double omega = 1.0;
  Decision decision = Decision::rejected;
  int order_used = 0;  // 0 = none
  double est1 = kNaN;
  double est2 = kNaN;
  double vel_err_l2 = kNaN;
  double pres_err_l2 = kNaN;
  double vel_exact_l2 = kNaN;
  double pres_exact_l2 = kNaN;
  double energy_lhs_increment = kNaN;
  double energy_rhs_increment = kNaN;
  double stability_monitor = kNaN;
  long long solves_cumulative = 0;

  [[nodiscard]] bool accepted() const { return decision != Decision::rejected; }
};

/// Per-step records plus the two boundary groups of the energy inequality.
struct Trajectory {
  std::vector<RunRecord> records;
  /// 1/2 ||u^1||^2 + 1/4 ||u^1 - u^0||^2
  double energy_initial = 0.0;
  /// 1/2 ||u^N||^2 + 1/4 ||u^N - u^{N-1}||^2
  double energy_final = 0.0;
};

// ---------------------------------------------------------------------------
// Relative l2(0,T;L2) error

struct ErrorSample {
  double dt;
  double error_norm;
  double exact_norm;
};

/// sqrt(sum dt ||e||^2 / sum dt ||u||^2).
[[nodiscard]] inline double relative_l2_l2_error(std::span<const ErrorSample> samples) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : samples) {
    num += s.dt * s.error_norm * s.error_norm;
    den += s.dt * s.exact_norm * s.exact_norm;
  }
  if (!(den > 0.0)) {
    throw std::invalid_argument("relative_l2_l2_error: exact solution is identically zero");
  }
  return std::sqrt(num / den);
}

enum class ErrorField { velocity, pressure };

/// Accepted rows only, each weighted by its own step.
[[nodiscard]] inline double relative_l2_l2_error(std::span<const RunRecord> records,
                                                 ErrorField field = ErrorField::velocity) {
  std::vector<ErrorSample> samples;
  samples.reserve(records.size());
  for (const auto& r : records) {
    if (!r.accepted()) {
      continue;
    }
    if (field == ErrorField::velocity) {
      samples.push_back({r.dt, r.vel_err_l2, r.vel_exact_l2});
    } else {
      samples.push_back({r.dt, r.pres_err_l2, r.pres_exact_l2});
    }
  }
  return relative_l2_l2_error(samples);
}

// ---------------------------------------------------------------------------
// Energy inequality of the variable-step BE-AB2 scheme

struct EnergyIncrement {
  double lhs;
  double rhs;
};

/// Per-step terms: lhs = nu/4 dt ||grad u^{n+1}||^2
///   + ||u^{n+1} - u^n + omega (u^n - u^{n-1})||^2 / (8 (1 + omega^2)),
/// rhs = dt / nu ||f^{n+1}||_{-1}^2.
template <NavierStokesBackend B>
[[nodiscard]] EnergyIncrement energy_increment(const typename B::Velocity& u_np1, const typename B::Velocity& u_n,
                                               const typename B::Velocity& u_nm1, double omega, double dt, double nu,
                                               const typename B::Velocity* f_next, const B& backend) {
  const double g = backend.grad_l2_norm(u_np1);
  const double jump = backend.l2_norm(u_np1 - u_n + omega * (u_n - u_nm1));
  const double lhs = 0.25 * nu * dt * g * g + jump * jump / (8.0 * (1.0 + omega * omega));
  double rhs = 0.0;
  if (f_next != nullptr) {
    const double fm = backend.h_minus1_norm(*f_next);
    rhs = dt / nu * fm * fm;
  }
  return {lhs, rhs};
}

/// 1/2 ||a||^2 + 1/4 ||a - b||^2
template <NavierStokesBackend B>
[[nodiscard]] double energy_boundary(const typename B::Velocity& a, const typename B::Velocity& b,
                                     const B& backend) {
  const double na = backend.l2_norm(a);
  const double d = backend.l2_norm(a - b);
  return 0.5 * na * na + 0.25 * d * d;
}

struct EnergyBudget {
  double lhs = 0.0;
  double rhs = 0.0;
  std::vector<EnergyIncrement> increments;

  [[nodiscard]] bool holds() const { return lhs <= rhs; }
};

[[nodiscard]] inline EnergyBudget energy_budget(const Trajectory& traj) {
  EnergyBudget b;
  b.lhs = traj.energy_final;
  b.rhs = traj.energy_initial;
  for (const auto& r : traj.records) {
    if (!r.accepted()) {
      continue;
    }
    b.increments.push_back({r.energy_lhs_increment, r.energy_rhs_increment});
    b.lhs += r.energy_lhs_increment;
    b.rhs += r.energy_rhs_increment;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Step-condition monitor

/// S_n = dt (1 + omega^2) ||grad E^{n+1}(u)||^2 / (nu h): the variable part of
/// the stability condition, without the unknown constant. Logged only.
template <NavierStokesBackend B>
[[nodiscard]] double stability_monitor(const StepHistory<typename B::Velocity, typename B::Pressure>& h, double dt,
                                       double nu, double h_equiv, const B& backend) {
  const double omega = step_ratio(dt, h.dt_prev);
  const double g = backend.grad_l2_norm(extrapolate(h.u_n, h.u_nm1, omega));
  return dt * (1.0 + omega * omega) * g * g / (nu * h_equiv);
}

// ---------------------------------------------------------------------------
// Convergence tables

struct ConvergenceRow {
  double parameter;
  double error;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  double fitted_rate = kNaN;
  double fit_residual = kNaN;
};

struct RateFit {
  double rate;
  /// RMS deviation of log(error) from the fitted line.
  double residual;
};

[[nodiscard]] inline RateFit fit_log_log(std::span<const ConvergenceRow> rows) {
  if (rows.size() < 3) {
    throw std::invalid_argument("fit_rate: need at least 3 rows");
  }
  double sx = 0.0;
  double sy = 0.0;
  for (const auto& r : rows) {
    if (!(r.parameter > 0.0) || !(r.error > 0.0)) {
      throw std::invalid_argument("fit_rate: parameters and errors must be positive");
    }
    sx += std::log(r.parameter);
    sy += std::log(r.error);
  }
  const double n = static_cast<double>(rows.size());
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& r : rows) {
    const double dx = std::log(r.parameter) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(r.error) - my);
  }
  if (!(sxx > 0.0)) {
    throw std::invalid_argument("fit_rate: parameters must not all coincide");
  }
  const double slope = sxy / sxx;
  double ss = 0.0;
  for (const auto& r : rows) {
    const double pred = my + slope * (std::log(r.parameter) - mx);
    const double d = std::log(r.error) - pred;
    ss += d * d;
  }
  return {slope, std::sqrt(ss / n)};
}

/// Least-squares slope of log(error) against log(parameter).
[[nodiscard]] inline double fit_rate(const ConvergenceTable& table) { return fit_log_log(table.rows).rate; }

/// Fills fitted_rate / fit_residual in place.
inline void fit(ConvergenceTable& table) {
  const auto f = fit_log_log(table.rows);
  table.fitted_rate = f.rate;
  table.fit_residual = f.residual;
}

}  // namespace imex12::diagnostics
