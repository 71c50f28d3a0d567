#pragma once

// Drives a problem from t = 0 to T with a constant-step or adaptive method.

#include <array>
#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "imex12/diagnostics.hpp"
#include "imex12/problems.hpp"
#include "imex12/timestepper/controller.hpp"
#include "imex12/timestepper/formulas.hpp"

namespace imex12 {

class IntegrationAbort : public std::runtime_error {
 public:
  enum class Kind { dt_underflow, rejection_cap };

  IntegrationAbort(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

enum class BootstrapMode {
  automatic,  // exact data when the problem has it, else substeps
  exact,
  substeps,
};

struct RunOptions {
  BootstrapMode bootstrap = BootstrapMode::automatic;
  /// Record (t, ||u||, ||p||) after every accepted step.
  bool record_norm_history = false;
};

struct RunStats {
  long long accepted = 0;
  long long rejected = 0;
  long long stokes_solves = 0;
  /// Solves spent producing u^1 (zero for exact bootstrap).
  long long bootstrap_solves = 0;
};

struct NormSample {
  double t;
  double velocity_l2;
  double pressure_l2;
};

template <class V, class P>
struct BootstrapResult {
  StepHistory<V, P> history;
  V u0;
  long long solves = 0;
};

template <class V, class P>
struct RunResult {
  diagnostics::Trajectory trajectory;
  StepHistory<V, P> final_state;
  RunStats stats;
  std::vector<NormSample> norm_history;
};

namespace detail {

template <NavierStokesBackend B>
typename B::Velocity sample_at(const B& backend, const problems::VectorField& field, double t) {
  return backend.sample_velocity([&](double x, double y) { return field(x, y, t); });
}

template <NavierStokesBackend B>
typename B::Pressure sample_at(const B& backend, const problems::ScalarField& field, double t) {
  return backend.sample_pressure([&](double x, double y) { return field(x, y, t); });
}

}  // namespace detail

/// Produces u^0, u^1 at t = 0, dt0 with dt_{-1} := dt0 (so omega_0 = 1).
template <NavierStokesBackend B>
[[nodiscard]] BootstrapResult<typename B::Velocity, typename B::Pressure> bootstrap(
    const problems::ProblemSpec& problem, double dt0, const B& backend,
    BootstrapMode mode = BootstrapMode::automatic) {
  using V = typename B::Velocity;
  using P = typename B::Pressure;
  if (!(dt0 > 0.0)) {
    throw std::invalid_argument("bootstrap: dt0 must be positive");
  }
  if (mode == BootstrapMode::automatic) {
    mode = problem.has_exact() ? BootstrapMode::exact : BootstrapMode::substeps;
  }
  if (mode == BootstrapMode::exact && !problem.has_exact()) {
    throw std::invalid_argument("bootstrap: exact mode needs an exact solution");
  }

  BootstrapResult<V, P> out;
  out.u0 = backend.project(backend.sample_velocity(problem.initial_velocity));

  StepHistory<V, P>& h = out.history;
  h.u_nm1 = out.u0;
  h.t_n = dt0;
  h.dt_prev = dt0;
  h.step_index = 1;

  if (mode == BootstrapMode::exact) {
    h.u_n = backend.project(detail::sample_at(backend, *problem.exact_velocity, dt0));
    h.p_n = detail::sample_at(backend, *problem.exact_pressure, dt0);
    return out;
  }

  constexpr int kSubsteps = 10;
  const double sub = dt0 / kSubsteps;
  StepHistory<V, P> s;
  s.u_n = out.u0;
  s.u_nm1 = out.u0;
  s.p_n = backend.zero_pressure();
  s.dt_prev = sub;
  for (int i = 0; i < kSubsteps; ++i) {
    const auto f = detail::sample_at(backend, problem.forcing, (i + 1) * sub);
    auto step = be_fe_step(s, sub, problem.nu, f, backend);
    s.u_nm1 = s.u_n;
    s.u_n = std::move(step.u_hat);
    s.p_n = std::move(step.p_new);
    ++out.solves;
  }
  h.u_n = std::move(s.u_n);
  h.p_n = std::move(s.p_n);
  return out;
}

/// Picks the step actually taken so the run lands on T without a sliver:
/// the remainder left after a step is either zero or >= ratio_min * step.
[[nodiscard]] inline double plan_step(double proposal, double remaining, double prev_attempt,
                                      const ControllerConfig& cfg) {
  if (proposal >= remaining) {
    return remaining;
  }
  if (remaining - proposal >= cfg.ratio_min * proposal) {
    return proposal;
  }
  const double half = 0.5 * remaining;
  return half >= cfg.ratio_min * prev_attempt ? half : remaining;
}

/// Integrates `problem` over [0, T]. Constant-step methods take dt0 for every
/// step (the last one clamped onto T); adaptive methods start from dt0 and
/// follow the controller. Throws IntegrationAbort on controller collapse.
template <NavierStokesBackend B>
[[nodiscard]] RunResult<typename B::Velocity, typename B::Pressure> run(const problems::ProblemSpec& problem,
                                                                        MethodId method, ControllerConfig config,
                                                                        double dt0, const B& backend,
                                                                        const RunOptions& opts = {}) {
  using V = typename B::Velocity;
  using P = typename B::Pressure;
  const double T = problem.final_time;
  const double nu = problem.nu;
  if (!(T > 0.0)) {
    throw std::invalid_argument("run: final time must be positive");
  }
  if (!(dt0 > 0.0) || !(dt0 < T)) {
    throw std::invalid_argument("run: need 0 < dt0 < T");
  }
  config = effective_config(method, config);
  if (!(config.dt_min > 0.0)) {
    config.dt_min = 1e-12 * T;
  }
  config.validate();
  const bool adaptive = is_adaptive(method);
  const bool track_errors = problem.has_exact();

  auto boot = bootstrap(problem, dt0, backend, opts.bootstrap);
  RunResult<V, P> result;
  result.stats.bootstrap_solves = boot.solves;
  StepHistory<V, P> h = std::move(boot.history);

  result.trajectory.energy_initial = diagnostics::energy_boundary(h.u_n, h.u_nm1, backend);
  if (opts.record_norm_history) {
    const P p0 = problem.exact_pressure ? detail::sample_at(backend, *problem.exact_pressure, 0.0)
                                        : backend.zero_pressure();
    result.norm_history.push_back({0.0, backend.l2_norm(boot.u0), backend.l2_norm(p0)});
    result.norm_history.push_back({h.t_n, backend.l2_norm(h.u_n), backend.l2_norm(h.p_n)});
  }

  // Constant steps keep dt0 bit-exact unless the remainder is genuinely short.
  auto constant_step = [dt0](double remaining) { return remaining >= dt0 * (1.0 - 1e-9) ? dt0 : remaining; };
  double dt = adaptive ? plan_step(dt0, T - h.t_n, dt0, config) : constant_step(T - h.t_n);
  int consecutive_rejections = 0;
  long long solves = 0;

  while (h.t_n < T) {
    const double remaining = T - h.t_n;
    bool lands = dt >= remaining;
    if (!adaptive && remaining - dt <= 1e-9 * dt) {
      lands = true;  // absorb accumulated round-off in n * dt
    }
    const double t_next = lands ? T : h.t_n + dt;

    const V f = detail::sample_at(backend, problem.forcing, t_next);

    diagnostics::RunRecord rec;
    rec.t = t_next;
    rec.dt = dt;
    rec.stability_monitor = diagnostics::stability_monitor(h, dt, nu, backend.h_equiv(), backend);

    StepAttempt<V, P> a;
    if (method == MethodId::be_fe) {
      auto s = be_fe_step(h, dt, nu, f, backend);
      a.dt_attempted = dt;
      a.omega = step_ratio(dt, h.dt_prev);
      a.u_order1 = std::move(s.u_hat);
      a.p_new = std::move(s.p_new);
      a.stokes_solves_used = 1;
      a.decision = Decision::accepted_order1;
      a.est1_norm = diagnostics::kNaN;
      a.est2_norm = diagnostics::kNaN;
    } else {
      a = attempt_step(h, dt, nu, f, config, backend);
      if (method == MethodId::be_ab2) {
        a.decision = Decision::accepted_order1;
      } else if (method == MethodId::be_ab2_f) {
        a.decision = Decision::accepted_order2;
      }
    }
    solves += a.stokes_solves_used;

    rec.omega = a.omega;
    rec.decision = a.decision;
    rec.order_used = a.order();
    rec.est1 = a.est1_norm;
    rec.est2 = a.est2_norm;
    rec.solves_cumulative = solves;

    if (a.accepted()) {
      const V& u_new = a.accepted_velocity();
      if (track_errors) {
        const V ue = backend.project(detail::sample_at(backend, *problem.exact_velocity, t_next));
        const P pe = detail::sample_at(backend, *problem.exact_pressure, t_next);
        rec.vel_err_l2 = backend.l2_norm(u_new - ue);
        rec.vel_exact_l2 = backend.l2_norm(ue);
        rec.pres_err_l2 = backend.l2_norm(a.p_new - pe);
        rec.pres_exact_l2 = backend.l2_norm(pe);
      }
      const auto inc = diagnostics::energy_increment(u_new, h.u_n, h.u_nm1, a.omega, dt, nu,
                                                     problem.unforced ? nullptr : &f, backend);
      rec.energy_lhs_increment = inc.lhs;
      rec.energy_rhs_increment = inc.rhs;

      h.advance(u_new, a.p_new, dt);
      if (lands) {
        h.t_n = T;
      }
      ++result.stats.accepted;
      consecutive_rejections = 0;
      if (opts.record_norm_history) {
        result.norm_history.push_back({h.t_n, backend.l2_norm(h.u_n), backend.l2_norm(h.p_n)});
      }
      if (h.t_n < T) {
        dt = adaptive ? plan_step(a.dt_next, T - h.t_n, dt, config) : constant_step(T - h.t_n);
      }
    } else {
      ++result.stats.rejected;
      ++consecutive_rejections;
      result.trajectory.records.push_back(rec);
      if (consecutive_rejections > config.max_consecutive_rejections) {
        std::ostringstream os;
        os << "run: more than " << config.max_consecutive_rejections << " consecutive rejections at t = " << h.t_n
           << " (dt = " << dt << ")";
        throw IntegrationAbort(IntegrationAbort::Kind::rejection_cap, os.str());
      }
      if (dt <= config.dt_min * (1.0 + 1e-12)) {
        std::ostringstream os;
        os << "run: step size underflow at t = " << h.t_n << " (dt = " << dt << " <= dt_min = " << config.dt_min
           << ")";
        throw IntegrationAbort(IntegrationAbort::Kind::dt_underflow, os.str());
      }
      dt = plan_step(a.dt_next, T - h.t_n, dt, config);
      continue;
    }
    result.trajectory.records.push_back(rec);
  }

  result.trajectory.energy_final = diagnostics::energy_boundary(h.u_n, h.u_nm1, backend);
  result.stats.stokes_solves = solves;
  result.final_state = std::move(h);
  return result;
}

}  // namespace imex12
