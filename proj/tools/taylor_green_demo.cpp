// Minimal library usage: adaptive run of the decaying Taylor-Green vortex.

#include <cstdio>

#include "imex12/diagnostics.hpp"
#include "imex12/problems.hpp"
#include "imex12/spectral2d.hpp"
#include "imex12/timestepper.hpp"

int main() {
  const auto problem = imex12::problems::taylor_green(/*nu=*/1.0, /*final_time=*/1.0);
  const imex12::spectral::SpectralBackend backend(32);

  imex12::ControllerConfig cfg;
  cfg.tol = 1e-4;
  const auto result = imex12::run(problem, imex12::MethodId::moose_imex_12, cfg, 1e-3, backend);

  const double err = imex12::diagnostics::relative_l2_l2_error(result.trajectory.records);
  std::printf("accepted %lld, rejected %lld, Stokes solves %lld, relative l2(L2) velocity error %.3e\n",
              result.stats.accepted, result.stats.rejected, result.stats.stokes_solves, err);
  return 0;
}
