#pragma once

// Benchmark problems on the 2*pi-periodic square. Both are amplitude
// modulations of the Taylor-Green cell
//   phi(x, y) = (cos x sin y, -sin x cos y),
// with u = F(t) phi, p = -F(t)^2 (cos 2x + cos 2y) / 4 and
// f = (2 nu F + F') phi, which solves the forced Navier-Stokes equations
// for any differentiable F.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace imex12::problems {

using VectorField = std::function<std::array<double, 2>(double x, double y, double t)>;
using ScalarField = std::function<double(double x, double y, double t)>;
using Amplitude = std::function<double(double t)>;

struct ProblemSpec {
  std::string name;
  double nu = 1.0;
  double final_time = 1.0;
  std::function<std::array<double, 2>(double x, double y)> initial_velocity;
  VectorField forcing;
  /// Identically zero forcing lets the energy monitor skip the H^-1 sum.
  bool unforced = false;
  std::optional<VectorField> exact_velocity;
  std::optional<ScalarField> exact_pressure;
  /// Present for the modulated Taylor-Green family.
  Amplitude amplitude;
  Amplitude amplitude_rate;

  [[nodiscard]] bool has_exact() const { return exact_velocity.has_value() && exact_pressure.has_value(); }
};

[[nodiscard]] inline std::array<double, 2> taylor_green_cell(double x, double y) {
  return {std::cos(x) * std::sin(y), -std::sin(x) * std::cos(y)};
}

[[nodiscard]] inline double taylor_green_pressure_shape(double x, double y) {
  return -0.25 * (std::cos(2.0 * x) + std::cos(2.0 * y));
}

/// Builds the exact-solution problem u = F(t) phi for a given amplitude.
[[nodiscard]] inline ProblemSpec modulated_taylor_green(std::string name, double nu, double final_time,
                                                        Amplitude F, Amplitude dF, bool unforced = false) {
  if (!(nu > 0.0)) {
    throw std::invalid_argument("problems: nu must be positive");
  }
  if (!(final_time > 0.0)) {
    throw std::invalid_argument("problems: final time must be positive");
  }
  ProblemSpec p;
  p.name = std::move(name);
  p.nu = nu;
  p.final_time = final_time;
  p.amplitude = F;
  p.amplitude_rate = dF;
  p.unforced = unforced;
  p.initial_velocity = [F](double x, double y) {
    auto c = taylor_green_cell(x, y);
    const double a = F(0.0);
    return std::array<double, 2>{a * c[0], a * c[1]};
  };
  p.forcing = [F, dF, nu, unforced](double x, double y, double t) {
    if (unforced) {
      return std::array<double, 2>{0.0, 0.0};
    }
    const double a = 2.0 * nu * F(t) + dF(t);
    auto c = taylor_green_cell(x, y);
    return std::array<double, 2>{a * c[0], a * c[1]};
  };
  p.exact_velocity = [F](double x, double y, double t) {
    auto c = taylor_green_cell(x, y);
    const double a = F(t);
    return std::array<double, 2>{a * c[0], a * c[1]};
  };
  p.exact_pressure = [F](double x, double y, double t) {
    const double a = F(t);
    return a * a * taylor_green_pressure_shape(x, y);
  };
  return p;
}

/// Decaying Taylor-Green vortex, F(t) = exp(-2 nu t), f = 0.
[[nodiscard]] inline ProblemSpec taylor_green(double nu = 1.0, double final_time = 1.0) {
  auto F = [nu](double t) { return std::exp(-2.0 * nu * t); };
  auto dF = [nu](double t) { return -2.0 * nu * std::exp(-2.0 * nu * t); };
  return modulated_taylor_green("taylor-green", nu, final_time, F, dF, /*unforced=*/true);
}

// Below this t, (10 t)^-10 exceeds ~745 and exp underflows to 0 anyway.
inline constexpr double kTransitionCutoff = 0.0517;

/// Smooth step g(t) = exp(-(10 t)^-10) for t > 0, else 0.
[[nodiscard]] inline double transition_g(double t) {
  if (t <= kTransitionCutoff) {
    return 0.0;
  }
  return std::exp(-std::pow(10.0 * t, -10.0));
}

/// g'(t) = g(t) * 10 / (t (10 t)^10).
[[nodiscard]] inline double transition_g_prime(double t) {
  if (t <= kTransitionCutoff) {
    return 0.0;
  }
  return transition_g(t) * 10.0 * std::pow(10.0 * t, -10.0) / t;
}

namespace detail {

[[nodiscard]] inline double wrap_unit(double t) { return t - std::floor(t); }

}  // namespace detail

/// Period-1 pulse F(t) = g(tau) - g(tau - 1/2), tau = t mod 1.
[[nodiscard]] inline double transient_amplitude(double t) {
  const double tau = detail::wrap_unit(t);
  return transition_g(tau) - transition_g(tau - 0.5);
}

[[nodiscard]] inline double transient_amplitude_rate(double t) {
  const double tau = detail::wrap_unit(t);
  return transition_g_prime(tau) - transition_g_prime(tau - 0.5);
}

/// Taylor-Green cell driven through periodic rapid on/off transients.
[[nodiscard]] inline ProblemSpec transient_problem(double nu = 1.0, double final_time = 2.0) {
  return modulated_taylor_green("transient", nu, final_time, transient_amplitude, transient_amplitude_rate);
}

/// Lookup by CLI name; unset overrides keep the problem's defaults.
[[nodiscard]] inline ProblemSpec problem_by_name(const std::string& name, std::optional<double> nu,
                                                 std::optional<double> final_time) {
  if (name == "taylor-green") {
    return taylor_green(nu.value_or(1.0), final_time.value_or(1.0));
  }
  if (name == "transient") {
    return transient_problem(nu.value_or(1.0), final_time.value_or(2.0));
  }
  throw std::invalid_argument("unknown problem '" + name + "'");
}

}  // namespace imex12::problems
