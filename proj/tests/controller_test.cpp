#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "imex12/problems.hpp"
#include "imex12/spectral2d.hpp"
#include "imex12/timestepper.hpp"

using namespace imex12;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Scalar backend for exercising the controller with hand-picked numbers.
struct ScalarBackend {
  using Velocity = double;
  using Pressure = double;
  [[nodiscard]] std::pair<double, double> stokes_solve(double rhs, double dt, double nu) const {
    return {rhs / (1.0 / dt + nu), 0.0};
  }
  [[nodiscard]] double nonlinear(double) const { return 0.0; }
  [[nodiscard]] double stokes_operator(double v) const { return v; }
  [[nodiscard]] double project(double v) const { return v; }
  [[nodiscard]] double zero_velocity() const { return 0.0; }
  [[nodiscard]] double zero_pressure() const { return 0.0; }
  [[nodiscard]] double l2_norm(double v) const { return std::abs(v); }
  [[nodiscard]] double grad_l2_norm(double v) const { return std::abs(v); }
  [[nodiscard]] double h_minus1_norm(double v) const { return std::abs(v); }
  [[nodiscard]] double h_equiv() const { return 1.0; }
  // One-point "grid" at the origin.
  [[nodiscard]] double sample_velocity(const std::function<std::array<double, 2>(double, double)>& f) const {
    return f(0.0, 0.0)[0];
  }
  [[nodiscard]] double sample_pressure(const std::function<double(double, double)>& f) const { return f(0.0, 0.0); }
};
static_assert(NavierStokesBackend<ScalarBackend>);

StepHistory<double, double> scalar_history(double unm2, double unm1, double un, double dt) {
  StepHistory<double, double> h;
  h.u_nm2 = unm2;
  h.dt_prev2 = dt;
  h.u_nm1 = unm1;
  h.u_n = un;
  h.p_n = 0.0;
  h.t_n = 1.0;
  h.dt_prev = dt;
  h.step_index = 2;
  return h;
}

}  // namespace

TEST(ProposeStepsize, Examples) {
  const ControllerConfig cfg;
  EXPECT_NEAR(propose_stepsize(0.1, 1e-3, 1e-3, 1, 0.9, cfg), 0.09, 1e-15);
  EXPECT_DOUBLE_EQ(propose_stepsize(0.1, 1e-3, 1e-9, 1, 0.9, cfg), 0.2);
  // 0.9 * 0.1 * (1/8)^(1/3) = 0.045 sits under the 0.5 dt floor
  EXPECT_DOUBLE_EQ(propose_stepsize(0.1, 1e-3, 8e-3, 2, 0.9, cfg), 0.05);
  ControllerConfig loose;
  loose.ratio_min = 0.1;
  EXPECT_NEAR(propose_stepsize(0.1, 1e-3, 8e-3, 2, 0.9, loose), 0.045, 1e-15);
}

TEST(ProposeStepsize, LimitsAndDegenerateEstimates) {
  ControllerConfig cfg;
  EXPECT_DOUBLE_EQ(propose_stepsize(0.1, 1e-3, 0.0, 2, 0.9, cfg), 0.2);
  EXPECT_DOUBLE_EQ(propose_stepsize(0.1, 1e-3, kInf, 2, 0.9, cfg), 0.05);
  EXPECT_DOUBLE_EQ(propose_stepsize(0.1, 1e-3, 1e3, 1, 0.9, cfg), 0.05);
  cfg.dt_max = 0.12;
  EXPECT_DOUBLE_EQ(propose_stepsize(0.1, 1e-3, 0.0, 2, 0.9, cfg), 0.12);
}

TEST(ProposeStepsize, MonotoneInEstimate) {
  const ControllerConfig cfg;
  for (int order : {1, 2}) {
    double prev = kInf;
    for (double est = 1e-8; est < 1e2; est *= 1.7) {
      const double p = propose_stepsize(0.1, 1e-3, est, order, 0.9, cfg);
      EXPECT_LE(p, prev);
      prev = p;
    }
  }
}

TEST(Config, Validation) {
  ControllerConfig c;
  EXPECT_NO_THROW(c.validate());
  c.tol = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.gamma_reject = 0.95;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.ratio_max = 0.9;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Methods, NamesRoundTrip) {
  for (auto m : {MethodId::be_fe, MethodId::be_ab2, MethodId::be_ab2_f, MethodId::vss_be_ab2, MethodId::vss_be_ab2_f,
                 MethodId::moose_imex_12}) {
    EXPECT_EQ(parse_method(method_name(m)), m);
  }
  EXPECT_THROW((void)parse_method("rk4"), std::invalid_argument);
  EXPECT_TRUE(effective_config(MethodId::vss_be_ab2, {}).force_est2_infinite);
  EXPECT_TRUE(effective_config(MethodId::vss_be_ab2_f, {}).force_est1_infinite);
}

// With nu negligible the scalar solve gives u_hat = u_n + dt f.
TEST(AttemptStep, AcceptsOrderTwoWhenItAllowsTheLargerStep) {
  const ScalarBackend b;
  // History t^2 at t = 0, 0.1, 0.2; f = 0.5 puts u_hat at 0.09, so
  // u2 = 0.0833, EST_1 = -1/150 and EST_2 = -(2/11)/150.
  auto h = scalar_history(0.0, 0.01, 0.04, 0.1);
  ControllerConfig cfg;
  cfg.tol = 0.01;
  const auto a = attempt_step(h, 0.1, 1e-300, 0.5, cfg, b);
  EXPECT_NEAR(a.est1_norm, 1.0 / 150, 1e-14);
  EXPECT_NEAR(a.est2_norm, 2.0 / 11 / 150, 1e-14);
  EXPECT_EQ(a.decision, Decision::accepted_order2);
  EXPECT_GT(a.dt_proposed_2, a.dt_proposed_1);
  EXPECT_EQ(a.dt_next, a.dt_proposed_2);
  EXPECT_EQ(a.stokes_solves_used, 1);
  EXPECT_EQ(a.accepted_velocity(), a.u_order2);
}

TEST(AttemptStep, AcceptsOrderOneWhenOnlyItPasses) {
  const ScalarBackend b;
  auto h = scalar_history(5.0, 0.0, 0.0, 0.1);  // wild u^{n-2} inflates EST_2 only
  ControllerConfig cfg;
  cfg.tol = 0.01;
  const auto a = attempt_step(h, 0.1, 1e-300, 0.0, cfg, b);
  ASSERT_LT(a.est1_norm, cfg.tol);
  ASSERT_GE(a.est2_norm, cfg.tol);
  EXPECT_EQ(a.decision, Decision::accepted_order1);
  EXPECT_EQ(a.dt_next, a.dt_proposed_1);
  EXPECT_EQ(a.accepted_velocity(), a.u_order1);
}

TEST(AttemptStep, RejectsAndRetriesWithTheLargerReducedStep) {
  const ScalarBackend b;
  auto h = scalar_history(0.0, 1.0, 0.0, 0.1);
  ControllerConfig cfg;
  cfg.tol = 1e-3;
  const double dt = 0.1;
  const auto a = attempt_step(h, dt, 1e-300, 0.0, cfg, b);
  ASSERT_GE(a.est1_norm, cfg.tol);
  ASSERT_GE(a.est2_norm, cfg.tol);
  EXPECT_EQ(a.decision, Decision::rejected);
  const double r1 = std::max(0.5 * dt, 0.7 * dt * std::pow(cfg.tol / a.est1_norm, 0.5));
  const double r2 = std::max(0.5 * dt, 0.7 * dt * std::pow(cfg.tol / a.est2_norm, 1.0 / 3.0));
  EXPECT_DOUBLE_EQ(a.dt_next, std::min(dt, std::max(r1, r2)));
}

TEST(AttemptStep, ForcedInfiniteEstimatesDisableACandidate) {
  const ScalarBackend b;
  auto h = scalar_history(0.0, 0.01, 0.04, 0.1);
  ControllerConfig cfg;
  cfg.tol = 0.1;
  cfg.force_est2_infinite = true;
  EXPECT_EQ(attempt_step(h, 0.1, 1e-300, 0.0, cfg, b).decision, Decision::accepted_order1);
  cfg.force_est2_infinite = false;
  cfg.force_est1_infinite = true;
  EXPECT_EQ(attempt_step(h, 0.1, 1e-300, 0.0, cfg, b).decision, Decision::accepted_order2);
}

TEST(AttemptStep, ResidualEstimatorOption) {
  const ScalarBackend b;
  auto h = scalar_history(0.0, 0.01, 0.04, 0.1);
  ControllerConfig cfg;
  cfg.est2_mode = Est2Mode::residual;
  const auto a = attempt_step(h, 0.1, 1.0, 0.0, cfg, b);
  EXPECT_TRUE(std::isfinite(a.est2_norm));
}

TEST(PlanStep, LandsOnFinalTimeWithoutSlivers) {
  const ControllerConfig cfg;
  EXPECT_DOUBLE_EQ(plan_step(0.3, 0.2, 0.1, cfg), 0.2);
  EXPECT_DOUBLE_EQ(plan_step(0.1, 1.0, 0.1, cfg), 0.1);
  EXPECT_DOUBLE_EQ(plan_step(0.19, 0.2, 0.1, cfg), 0.1);  // split the remainder in two
  EXPECT_DOUBLE_EQ(plan_step(0.19, 0.2, 0.3, cfg), 0.2);  // halves would break the ratio floor
}

// ---------------------------------------------------------------------------
// Whole runs

namespace {
using Backend = spectral::SpectralBackend;
}

TEST(Bootstrap, ExactStartMatchesSolution) {
  const Backend b(16);
  const auto tg = problems::taylor_green();
  const auto boot = bootstrap(tg, 0.01, b, BootstrapMode::exact);
  const auto ue = b.sample_velocity([&](double x, double y) { return (*tg.exact_velocity)(x, y, 0.01); });
  EXPECT_LE(b.l2_norm(boot.history.u_n - ue), 1e-14);
  EXPECT_EQ(boot.solves, 0);
  EXPECT_EQ(boot.history.dt_prev, 0.01);
}

TEST(Bootstrap, SubstepStartIsAccurate) {
  const Backend b(16);
  const auto tg = problems::taylor_green();
  const double dt0 = 0.01;
  const auto boot = bootstrap(tg, dt0, b, BootstrapMode::substeps);
  const auto ue = b.sample_velocity([&](double x, double y) { return (*tg.exact_velocity)(x, y, dt0); });
  EXPECT_EQ(boot.solves, 10);
  EXPECT_LE(b.l2_norm(boot.history.u_n - ue), dt0 * dt0 * b.l2_norm(ue));
}

TEST(Run, ConstantStepLandsOnFinalTime) {
  const Backend b(16);
  const auto tg = problems::taylor_green(1.0, 0.25);
  const auto r = run(tg, MethodId::be_ab2_f, {}, 0.04, b);
  ASSERT_FALSE(r.trajectory.records.empty());
  EXPECT_EQ(r.trajectory.records.back().t, 0.25);
  EXPECT_EQ(r.stats.rejected, 0);
  EXPECT_EQ(r.stats.stokes_solves, r.stats.accepted);
}

TEST(Run, FilteredStepIsSecondOrder) {
  const Backend b(16);
  const auto tg = problems::taylor_green();
  auto err = [&](double dt) {
    const auto r = run(tg, MethodId::be_ab2_f, {}, dt, b);
    return diagnostics::relative_l2_l2_error(r.trajectory.records);
  };
  EXPECT_NEAR(err(1.0 / 40) / err(1.0 / 80), 4.0, 0.4);
}

TEST(Run, AdaptiveAccountingAndRatios) {
  const Backend b(16);
  const auto p = problems::transient_problem(1.0, 0.6);
  ControllerConfig cfg;
  cfg.tol = 1e-3;
  const auto r = run(p, MethodId::moose_imex_12, cfg, 1e-3, b);
  EXPECT_EQ(r.stats.stokes_solves, r.stats.accepted + r.stats.rejected);
  EXPECT_GT(r.stats.rejected, 0);
  EXPECT_EQ(r.trajectory.records.front().omega, 1.0);
  long long solves = 0;
  double prev_attempt = 1e-3;
  for (const auto& rec : r.trajectory.records) {
    ++solves;
    EXPECT_EQ(rec.solves_cumulative, solves);
    const double ratio = rec.dt / prev_attempt;
    EXPECT_GE(ratio, 0.5 * (1 - 1e-12));
    EXPECT_LE(ratio, 2.0 * (1 + 1e-12));
    prev_attempt = rec.dt;
  }
  EXPECT_EQ(r.trajectory.records.back().t, 0.6);
}

TEST(Run, RejectsBadStart) {
  const Backend b(8);
  const auto tg = problems::taylor_green();
  EXPECT_THROW((void)run(tg, MethodId::be_fe, {}, 0.0, b), std::invalid_argument);
  EXPECT_THROW((void)run(tg, MethodId::be_fe, {}, 2.0, b), std::invalid_argument);
}

TEST(Run, RejectionCapAborts) {
  const Backend b(16);
  const auto p = problems::transient_problem(1.0, 0.6);
  ControllerConfig cfg;
  cfg.tol = 1e-14;
  cfg.max_consecutive_rejections = 2;
  EXPECT_THROW((void)run(p, MethodId::moose_imex_12, cfg, 0.05, b), IntegrationAbort);
}
