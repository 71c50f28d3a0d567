#pragma once

// Temporal algebra of the BE-AB2 / time-filter embedded pair.

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>

#include "imex12/timestepper/backend.hpp"

namespace imex12 {

/// Thrown when a formula needs more back states than the history holds.
class StartupError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// The integrator's memory: up to three back velocities and two back steps.
template <class Velocity, class Pressure>
struct StepHistory {
  std::optional<Velocity> u_nm2;
  Velocity u_nm1;
  Velocity u_n;
  Pressure p_n;
  double t_n = 0.0;
  double dt_prev = 0.0;                 // t^n - t^{n-1}
  std::optional<double> dt_prev2;       // t^{n-1} - t^{n-2}
  std::size_t step_index = 0;           // n

  void validate() const {
    if (!(dt_prev > 0.0)) {
      throw std::invalid_argument("StepHistory: dt_prev must be positive");
    }
    if (dt_prev2 && !(*dt_prev2 > 0.0)) {
      throw std::invalid_argument("StepHistory: dt_prev2 must be positive");
    }
    if (u_nm2.has_value() != (step_index >= 2)) {
      throw std::invalid_argument("StepHistory: u_nm2 must be present iff step_index >= 2");
    }
    if (u_nm2.has_value() != dt_prev2.has_value()) {
      throw std::invalid_argument("StepHistory: u_nm2 and dt_prev2 must be set together");
    }
  }

  /// Shift in an accepted (t^{n+1}, u^{n+1}, p^{n+1}).
  void advance(Velocity u_new, Pressure p_new, double dt) {
    u_nm2 = std::move(u_nm1);
    dt_prev2 = dt_prev;
    u_nm1 = std::move(u_n);
    u_n = std::move(u_new);
    p_n = std::move(p_new);
    dt_prev = dt;
    t_n += dt;
    ++step_index;
  }
};

/// omega = dt_new / dt_old.
[[nodiscard]] inline double step_ratio(double dt_new, double dt_old) {
  if (!(dt_new > 0.0) || !(dt_old > 0.0)) {
    throw std::invalid_argument("step_ratio: step sizes must be positive");
  }
  return dt_new / dt_old;
}

/// E^{n+1}(u) = (1 + omega) u^n - omega u^{n-1}, written as
/// u^n + omega (u^n - u^{n-1}) so that E == u^n exactly when the back
/// states coincide.
template <LinearState S>
[[nodiscard]] S extrapolate(const S& u_n, const S& u_nm1, double omega) {
  return u_n + omega * (u_n - u_nm1);
}

/// Variable-step time filter: u_hat - omega/(2 omega + 1) (u_hat - E^{n+1}).
template <LinearState S>
[[nodiscard]] S apply_filter(const S& u_hat, const S& u_n, const S& u_nm1, double omega) {
  if (!(omega > 0.0)) {
    throw std::invalid_argument("apply_filter: omega must be positive");
  }
  const double c = omega / (2.0 * omega + 1.0);
  return u_hat - c * (u_hat - extrapolate(u_n, u_nm1, omega));
}

/// EST_1 = u_{h,2}^{n+1} - u_{h,1}^{n+1}.
template <LinearState S>
[[nodiscard]] S est1(const S& u_order2, const S& u_order1) {
  return u_order2 - u_order1;
}

/// Coefficients of the variable-step third difference behind EST_2:
///   EST_2 = prefactor * (u2 + c_n u^n + c_nm1 u^{n-1} + c_nm2 u^{n-2}).
struct Est2Coefficients {
  double prefactor;
  double c_n;
  double c_nm1;
  double c_nm2;
};

/// omega_n = dt_n / dt_{n-1}, omega_nm1 = dt_{n-1} / dt_{n-2}.
[[nodiscard]] inline Est2Coefficients est2_coefficients(double omega_n, double omega_nm1) {
  if (!(omega_n > 0.0) || !(omega_nm1 > 0.0)) {
    throw std::invalid_argument("est2_coefficients: ratios must be positive");
  }
  const double w = omega_n;
  const double v = omega_nm1;
  const double q = 1.0 + v * (1.0 + w);
  return {
      v * w * (1.0 + w) / (1.0 + 2.0 * w + v * (1.0 + 4.0 * w + 3.0 * w * w)),
      -(1.0 + w) * q / (1.0 + v),
      w * q,
      -(v * v * w * (1.0 + w)) / (1.0 + v),
  };
}

template <LinearState S>
[[nodiscard]] S est2_difference(const S& u_order2, const S& u_n, const S& u_nm1, const S& u_nm2, double omega_n,
                                double omega_nm1) {
  const auto c = est2_coefficients(omega_n, omega_nm1);
  return c.prefactor * (u_order2 + c.c_n * u_n + c.c_nm1 * u_nm1 + c.c_nm2 * u_nm2);
}

/// History-driven EST_2 for a step of size dt; needs three back states.
template <class V, class P>
[[nodiscard]] V est2_difference(const StepHistory<V, P>& h, const V& u_order2, double dt) {
  if (!h.u_nm2 || !h.dt_prev2) {
    throw StartupError("est2_difference: u^{n-2} not yet available");
  }
  return est2_difference(u_order2, h.u_n, h.u_nm1, *h.u_nm2, step_ratio(dt, h.dt_prev),
                         step_ratio(h.dt_prev, *h.dt_prev2));
}

/// Low-storage EST_2: residual of u2 in the variable-step BDF2 equation,
///   (1/dt)[(1+2w)/(1+w) u2 - (1+w) u^n + w^2/(1+w) u^{n-1}] + nu A u2 + N(u2) - f,
/// projected onto divergence-free fields (the mass matrix is the identity).
template <NavierStokesBackend B>
[[nodiscard]] typename B::Velocity est2_residual(const typename B::Velocity& u_order2,
                                                 const typename B::Velocity& u_n,
                                                 const typename B::Velocity& u_nm1, double omega, double dt,
                                                 double nu, const typename B::Velocity& f_next, const B& backend) {
  if (!(dt > 0.0) || !(omega > 0.0)) {
    throw std::invalid_argument("est2_residual: dt and omega must be positive");
  }
  const double a2 = (1.0 + 2.0 * omega) / (1.0 + omega);
  const double a1 = 1.0 + omega;
  const double a0 = omega * omega / (1.0 + omega);
  auto r = (1.0 / dt) * (a2 * u_order2 - a1 * u_n + a0 * u_nm1);
  r = r + nu * backend.stokes_operator(u_order2);
  r = r + backend.nonlinear(u_order2);
  r = r - f_next;
  return backend.project(r);
}

/// Result of one IMEX solve: the BE-AB2 (or BE-FE) velocity and pressure.
template <class V, class P>
struct ImexSolution {
  V u_hat;
  P p_new;
};

namespace detail {

template <NavierStokesBackend B>
ImexSolution<typename B::Velocity, typename B::Pressure> implicit_solve(const typename B::Velocity& u_n,
                                                                       const typename B::Velocity& convected,
                                                                       double dt, double nu,
                                                                       const typename B::Velocity& f_next,
                                                                       const B& backend) {
  if (!(dt > 0.0) || !(nu > 0.0)) {
    throw std::invalid_argument("imex step: dt and nu must be positive");
  }
  auto rhs = (1.0 / dt) * u_n + f_next - backend.nonlinear(convected);
  auto [u, p] = backend.stokes_solve(rhs, dt, nu);
  return {std::move(u), std::move(p)};
}

}  // namespace detail

/// BE-AB2: backward Euler with the nonlinearity at the linear extrapolant.
/// Consumes exactly one shifted-Stokes solve.
template <NavierStokesBackend B>
[[nodiscard]] ImexSolution<typename B::Velocity, typename B::Pressure> be_ab2_step(
    const StepHistory<typename B::Velocity, typename B::Pressure>& h, double dt, double nu,
    const typename B::Velocity& f_next, const B& backend) {
  const double omega = step_ratio(dt, h.dt_prev);
  return detail::implicit_solve(h.u_n, extrapolate(h.u_n, h.u_nm1, omega), dt, nu, f_next, backend);
}

/// BE-FE: backward Euler with the nonlinearity lagged at u^n.
template <NavierStokesBackend B>
[[nodiscard]] ImexSolution<typename B::Velocity, typename B::Pressure> be_fe_step(
    const StepHistory<typename B::Velocity, typename B::Pressure>& h, double dt, double nu,
    const typename B::Velocity& f_next, const B& backend) {
  return detail::implicit_solve(h.u_n, h.u_n, dt, nu, f_next, backend);
}

}  // namespace imex12
