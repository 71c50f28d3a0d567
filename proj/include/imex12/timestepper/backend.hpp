#pragma once

#include <array>
#include <concepts>
#include <functional>
#include <utility>

namespace imex12 {

/// Vector-space arithmetic the temporal formulas need. `double` qualifies,
/// which keeps the coefficient algebra testable on scalars.
template <class S>
concept LinearState = std::copyable<S> && requires(const S& a, const S& b, double s) {
  { a + b } -> std::convertible_to<S>;
  { a - b } -> std::convertible_to<S>;
  { s * a } -> std::convertible_to<S>;
};

/// What a spatial discretization must provide to be advanced in time.
/// Every returned velocity must be discretely divergence-free.
template <class B>
concept NavierStokesBackend =
    LinearState<typename B::Velocity> && LinearState<typename B::Pressure> &&
    requires(const B& b, const typename B::Velocity& u, const typename B::Pressure& p, double s,
             const std::function<std::array<double, 2>(double, double)>& vf,
             const std::function<double(double, double)>& sf) {
      { b.stokes_solve(u, s, s) } -> std::same_as<std::pair<typename B::Velocity, typename B::Pressure>>;
      { b.nonlinear(u) } -> std::same_as<typename B::Velocity>;
      { b.stokes_operator(u) } -> std::same_as<typename B::Velocity>;
      { b.project(u) } -> std::same_as<typename B::Velocity>;
      { b.zero_velocity() } -> std::same_as<typename B::Velocity>;
      { b.zero_pressure() } -> std::same_as<typename B::Pressure>;
      { b.l2_norm(u) } -> std::convertible_to<double>;
      { b.grad_l2_norm(u) } -> std::convertible_to<double>;
      { b.h_minus1_norm(u) } -> std::convertible_to<double>;
      { b.l2_norm(p) } -> std::convertible_to<double>;
      { b.h_equiv() } -> std::convertible_to<double>;
      { b.sample_velocity(vf) } -> std::same_as<typename B::Velocity>;
      { b.sample_pressure(sf) } -> std::same_as<typename B::Pressure>;
    };

}  // namespace imex12
