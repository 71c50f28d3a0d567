#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "imex12/diagnostics.hpp"
#include "imex12/problems.hpp"
#include "imex12/spectral2d.hpp"
#include "imex12/timestepper.hpp"

using namespace imex12;
using diagnostics::ConvergenceRow;
using diagnostics::ErrorSample;

TEST(ErrorMetric, Examples) {
  const std::vector<ErrorSample> exact{{0.1, 0.0, 2.0}, {0.1, 0.0, 1.0}};
  EXPECT_EQ(diagnostics::relative_l2_l2_error(exact), 0.0);
  const std::vector<ErrorSample> one{{1.0, 3.0, 4.0}};
  EXPECT_DOUBLE_EQ(diagnostics::relative_l2_l2_error(one), 0.75);
  const std::vector<ErrorSample> zero{{1.0, 1.0, 0.0}};
  EXPECT_THROW((void)diagnostics::relative_l2_l2_error(zero), std::invalid_argument);
}

TEST(ErrorMetric, HomogeneityOnRandomTrajectories) {
  std::mt19937_64 rng(30);
  std::uniform_real_distribution<double> pos(0.01, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ErrorSample> s;
    for (int i = 0; i < 20; ++i) {
      const double u = pos(rng);
      s.push_back({pos(rng), 0.1 * u, u});  // u_h = 1.1 u at every node
    }
    EXPECT_NEAR(diagnostics::relative_l2_l2_error(s), 0.1, 1e-15);
  }
}

TEST(ErrorMetric, RecordsSkipRejections) {
  using diagnostics::RunRecord;
  RunRecord a;
  a.decision = Decision::accepted_order1;
  a.dt = 1.0;
  a.vel_err_l2 = 3.0;
  a.vel_exact_l2 = 4.0;
  a.pres_err_l2 = 1.0;
  a.pres_exact_l2 = 2.0;
  RunRecord rej;  // NaN errors, must be ignored
  const std::vector<RunRecord> recs{a, rej};
  EXPECT_DOUBLE_EQ(diagnostics::relative_l2_l2_error(recs), 0.75);
  EXPECT_DOUBLE_EQ(diagnostics::relative_l2_l2_error(recs, diagnostics::ErrorField::pressure), 0.5);
}

TEST(FitRate, Examples) {
  const std::vector<ConvergenceRow> linear{{0.1, 0.3}, {0.05, 0.15}, {0.025, 0.075}, {0.0125, 0.0375}};
  EXPECT_NEAR(diagnostics::fit_log_log(linear).rate, 1.0, 1e-12);
  const std::vector<ConvergenceRow> quad{{0.1, 1e-2}, {0.05, 2.5e-3}, {0.025, 6.25e-4}};
  diagnostics::ConvergenceTable t{quad};
  EXPECT_NEAR(diagnostics::fit_rate(t), 2.0, 1e-12);
  diagnostics::fit(t);
  EXPECT_NEAR(t.fitted_rate, 2.0, 1e-12);
  EXPECT_NEAR(t.fit_residual, 0.0, 1e-12);
}

TEST(FitRate, RejectsDegenerateTables) {
  const std::vector<ConvergenceRow> two{{0.1, 1.0}, {0.05, 0.5}};
  EXPECT_THROW((void)diagnostics::fit_log_log(two), std::invalid_argument);
  const std::vector<ConvergenceRow> bad{{0.1, 1.0}, {0.05, 0.0}, {0.02, 0.1}};
  EXPECT_THROW((void)diagnostics::fit_log_log(bad), std::invalid_argument);
}

namespace {
using Backend = spectral::SpectralBackend;
}

TEST(StabilityMonitor, TaylorGreenStartup) {
  const Backend b(32);
  const auto u0 = b.sample_velocity(problems::taylor_green_cell);
  StepHistory<Backend::Velocity, Backend::Pressure> h;
  h.u_n = u0;
  h.u_nm1 = u0;
  h.p_n = b.zero_pressure();
  h.dt_prev = 1.0 / 40;
  const double s = diagnostics::stability_monitor(h, 1.0 / 40, 1.0, b.h_equiv(), b);
  // ||grad u_TG||^2 = 4 pi^2, so S = (1/40) 2 (4 pi^2) / (2 pi / 32) = 3.2 pi
  EXPECT_NEAR(s, 3.2 * std::numbers::pi, 1e-12);
  EXPECT_NEAR(diagnostics::stability_monitor(h, 2.0 / 40, 1.0, b.h_equiv(), b) / s, 2.0 * (1 + 4.0) / 2.0, 1e-12);
}

TEST(StabilityMonitor, ZeroStates) {
  const Backend b(8);
  StepHistory<Backend::Velocity, Backend::Pressure> h;
  h.u_n = b.zero_velocity();
  h.u_nm1 = b.zero_velocity();
  h.p_n = b.zero_pressure();
  h.dt_prev = 0.1;
  EXPECT_EQ(diagnostics::stability_monitor(h, 0.1, 1.0, b.h_equiv(), b), 0.0);
}

TEST(EnergyBudget, ZeroTrajectory) {
  const Backend b(8);
  const auto p = problems::modulated_taylor_green(
      "still", 1.0, 0.5, [](double) { return 0.0; }, [](double) { return 0.0; }, true);
  const auto r = run(p, MethodId::vss_be_ab2, {}, 0.1, b);
  const auto budget = diagnostics::energy_budget(r.trajectory);
  EXPECT_EQ(budget.lhs, 0.0);
  EXPECT_EQ(budget.rhs, 0.0);
  EXPECT_TRUE(budget.holds());
}

TEST(EnergyBudget, UnforcedRunHasOnlyInitialData) {
  const Backend b(16);
  const auto tg = problems::taylor_green();
  const auto r = run(tg, MethodId::be_ab2, {}, 1.0 / 40, b);
  const auto budget = diagnostics::energy_budget(r.trajectory);
  EXPECT_EQ(budget.rhs, r.trajectory.energy_initial);
  EXPECT_TRUE(budget.holds());
  EXPECT_EQ(budget.increments.size(), static_cast<std::size_t>(r.stats.accepted));
}

TEST(EnergyBudget, ForcedRunCountsForcing) {
  const Backend b(16);
  const auto p = problems::transient_problem(1.0, 0.5);
  const auto r = run(p, MethodId::be_ab2, {}, 0.01, b);
  const auto budget = diagnostics::energy_budget(r.trajectory);
  EXPECT_GT(budget.rhs, r.trajectory.energy_initial);
  EXPECT_TRUE(budget.holds());
}
