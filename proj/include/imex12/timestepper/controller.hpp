#pragma once

// One-solve embedded order-1/order-2 step with accept/reject control.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "imex12/timestepper/formulas.hpp"

namespace imex12 {

enum class Est2Mode { difference, residual };
enum class EstNorm { l2_absolute, l2_relative };

struct ControllerConfig {
  double tol = 1e-3;
  double gamma = 0.9;
  double gamma_reject = 0.7;
  double ratio_min = 0.5;
  double ratio_max = 2.0;
  /// Absolute abort floor; <= 0 means 1e-12 * T (resolved by the integrator).
  double dt_min = 0.0;
  std::optional<double> dt_max;
  int max_consecutive_rejections = 20;
  Est2Mode est2_mode = Est2Mode::difference;
  EstNorm est_norm = EstNorm::l2_absolute;
  /// Treat ||EST_1|| (resp. ||EST_2||) as +inf. The VSS variants are
  /// exactly these overrides of the full controller.
  bool force_est1_infinite = false;
  bool force_est2_infinite = false;

  void validate() const {
    if (!(tol > 0.0)) {
      throw std::invalid_argument("ControllerConfig: tol must be positive");
    }
    if (!(gamma_reject > 0.0 && gamma_reject <= gamma && gamma < 1.0)) {
      throw std::invalid_argument("ControllerConfig: need 0 < gamma_reject <= gamma < 1");
    }
    if (!(ratio_min > 0.0 && ratio_min <= 1.0 && ratio_max >= 1.0)) {
      throw std::invalid_argument("ControllerConfig: need 0 < ratio_min <= 1 <= ratio_max");
    }
    if (dt_max && !(*dt_max > 0.0)) {
      throw std::invalid_argument("ControllerConfig: dt_max must be positive");
    }
    if (max_consecutive_rejections < 1) {
      throw std::invalid_argument("ControllerConfig: max_consecutive_rejections must be >= 1");
    }
  }
};

enum class MethodId { be_fe, be_ab2, be_ab2_f, vss_be_ab2, vss_be_ab2_f, moose_imex_12 };

[[nodiscard]] constexpr bool is_adaptive(MethodId m) {
  return m == MethodId::vss_be_ab2 || m == MethodId::vss_be_ab2_f || m == MethodId::moose_imex_12;
}

[[nodiscard]] constexpr std::string_view method_name(MethodId m) {
  switch (m) {
    case MethodId::be_fe: return "be-fe";
    case MethodId::be_ab2: return "be-ab2";
    case MethodId::be_ab2_f: return "be-ab2-f";
    case MethodId::vss_be_ab2: return "vss-be-ab2";
    case MethodId::vss_be_ab2_f: return "vss-be-ab2-f";
    case MethodId::moose_imex_12: return "moose12";
  }
  return "?";
}

[[nodiscard]] inline MethodId parse_method(std::string_view s) {
  for (auto m : {MethodId::be_fe, MethodId::be_ab2, MethodId::be_ab2_f, MethodId::vss_be_ab2,
                 MethodId::vss_be_ab2_f, MethodId::moose_imex_12}) {
    if (method_name(m) == s) {
      return m;
    }
  }
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

/// The controller settings a method implies: VSS BE-AB2 never trusts the
/// order-2 candidate and VSS BE-AB2+F never trusts the order-1 one.
[[nodiscard]] inline ControllerConfig effective_config(MethodId m, ControllerConfig c) {
  if (m == MethodId::vss_be_ab2) {
    c.force_est2_infinite = true;
  } else if (m == MethodId::vss_be_ab2_f) {
    c.force_est1_infinite = true;
  }
  return c;
}

enum class Decision { accepted_order1, accepted_order2, rejected };

[[nodiscard]] constexpr std::string_view decision_name(Decision d) {
  switch (d) {
    case Decision::accepted_order1: return "accepted_order1";
    case Decision::accepted_order2: return "accepted_order2";
    case Decision::rejected: return "rejected";
  }
  return "?";
}

/// safety * dt * (tol / est)^(1/(order+1)), clamped by the ratio limiter and
/// by [dt_min, dt_max]. est = 0 yields the ratio_max growth.
[[nodiscard]] inline double propose_stepsize(double dt, double tol, double est_norm, int order, double safety,
                                             const ControllerConfig& cfg) {
  double proposal = 0.0;
  if (est_norm == 0.0) {
    proposal = std::numeric_limits<double>::infinity();
  } else if (std::isinf(est_norm)) {
    proposal = 0.0;
  } else {
    proposal = safety * dt * std::pow(tol / est_norm, 1.0 / (order + 1));
  }
  proposal = std::clamp(proposal, cfg.ratio_min * dt, cfg.ratio_max * dt);
  if (cfg.dt_max) {
    proposal = std::min(proposal, *cfg.dt_max);
  }
  return std::max(proposal, cfg.dt_min);
}

template <class V, class P>
struct StepAttempt {
  double dt_attempted = 0.0;
  double omega = 1.0;
  V u_order1;
  V u_order2;
  P p_new;
  double est1_norm = std::numeric_limits<double>::infinity();
  double est2_norm = std::numeric_limits<double>::infinity();
  double dt_proposed_1 = 0.0;
  double dt_proposed_2 = 0.0;
  /// Next step on acceptance, retry step on rejection.
  double dt_next = 0.0;
  Decision decision = Decision::rejected;
  int stokes_solves_used = 0;

  [[nodiscard]] bool accepted() const { return decision != Decision::rejected; }
  [[nodiscard]] int order() const {
    return decision == Decision::accepted_order1 ? 1 : decision == Decision::accepted_order2 ? 2 : 0;
  }
  [[nodiscard]] const V& accepted_velocity() const {
    return decision == Decision::accepted_order2 ? u_order2 : u_order1;
  }
};

/// One attempt of the embedded pair: a single BE-AB2 solve, the filter, both
/// estimators, and the accept/reject decision with the next step size.
template <NavierStokesBackend B>
[[nodiscard]] StepAttempt<typename B::Velocity, typename B::Pressure> attempt_step(
    const StepHistory<typename B::Velocity, typename B::Pressure>& h, double dt, double nu,
    const typename B::Velocity& f_next, const ControllerConfig& cfg, const B& backend) {
  using V = typename B::Velocity;
  constexpr double inf = std::numeric_limits<double>::infinity();

  StepAttempt<V, typename B::Pressure> a;
  a.dt_attempted = dt;
  a.omega = step_ratio(dt, h.dt_prev);

  auto solved = be_ab2_step(h, dt, nu, f_next, backend);
  a.stokes_solves_used = 1;
  a.u_order1 = std::move(solved.u_hat);
  a.p_new = std::move(solved.p_new);
  a.u_order2 = apply_filter(a.u_order1, h.u_n, h.u_nm1, a.omega);

  auto scaled = [&](double norm, const V& candidate) {
    if (cfg.est_norm == EstNorm::l2_relative) {
      const double ref = backend.l2_norm(candidate);
      return ref > 0.0 ? norm / ref : inf;
    }
    return norm;
  };

  const double est1_raw = scaled(backend.l2_norm(est1(a.u_order2, a.u_order1)), a.u_order1);

  std::optional<double> est2_raw;
  if (!cfg.force_est2_infinite) {
    if (cfg.est2_mode == Est2Mode::residual) {
      est2_raw = scaled(backend.l2_norm(est2_residual(a.u_order2, h.u_n, h.u_nm1, a.omega, dt, nu, f_next, backend)),
                        a.u_order2);
    } else if (h.u_nm2) {
      est2_raw = scaled(backend.l2_norm(est2_difference(h, a.u_order2, dt)), a.u_order2);
    }
  }

  a.est1_norm = cfg.force_est1_infinite ? inf : est1_raw;
  a.est2_norm = est2_raw.value_or(inf);

  // An order-2-only controller has nothing to judge its first step by until
  // EST_2 exists; fall back to EST_1 for that candidate.
  const bool order2_startup = cfg.force_est1_infinite && !est2_raw;
  const double judge2 = order2_startup ? est1_raw : a.est2_norm;
  const int exponent2 = order2_startup ? 1 : 2;

  const bool pass1 = a.est1_norm < cfg.tol;
  const bool pass2 = judge2 < cfg.tol;

  if (pass1 || pass2) {
    a.dt_proposed_1 = propose_stepsize(dt, cfg.tol, a.est1_norm, 1, cfg.gamma, cfg);
    a.dt_proposed_2 = propose_stepsize(dt, cfg.tol, judge2, exponent2, cfg.gamma, cfg);
    bool use2 = pass2;
    if (pass1 && pass2) {
      use2 = a.dt_proposed_2 >= a.dt_proposed_1;
    }
    a.decision = use2 ? Decision::accepted_order2 : Decision::accepted_order1;
    a.dt_next = use2 ? a.dt_proposed_2 : a.dt_proposed_1;
  } else {
    a.dt_proposed_1 = propose_stepsize(dt, cfg.tol, a.est1_norm, 1, cfg.gamma_reject, cfg);
    a.dt_proposed_2 = propose_stepsize(dt, cfg.tol, judge2, exponent2, cfg.gamma_reject, cfg);
    a.decision = Decision::rejected;
    a.dt_next = std::min(dt, std::max(a.dt_proposed_1, a.dt_proposed_2));
  }
  return a;
}

}  // namespace imex12
