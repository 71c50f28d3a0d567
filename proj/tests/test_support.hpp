#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "imex12/spectral2d.hpp"

namespace imex12::support {

/// Real-valued random velocity with coefficients only inside the 2/3-rule band
/// and no Nyquist content. Built in physical space from random modes so the
/// Hermitian symmetry comes for free.
inline spectral::SpectralVelocity random_velocity(const spectral::GridPtr& g, std::mt19937_64& rng,
                                                  int kmax = 0) {
  const int n = g->n();
  if (kmax <= 0) {
    kmax = n / 3 - 1;
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  spectral::PhysicalField f(g, 2);
  for (int c = 0; c < 2; ++c) {
    for (int kx = -kmax; kx <= kmax; ++kx) {
      for (int ky = -kmax; ky <= kmax; ++ky) {
        if (kx < 0 || (kx == 0 && ky <= 0)) {
          continue;  // one representative per +/- pair, no mean
        }
        const double a = normal(rng) / (1.0 + kx * kx + ky * ky);
        const double b = normal(rng) / (1.0 + kx * kx + ky * ky);
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            const double phase = kx * g->x(i) + ky * g->x(j);
            f.components[c][g->index(i, j)] += a * std::cos(phase) + b * std::sin(phase);
          }
        }
      }
    }
  }
  return spectral::to_spectral_velocity(f);
}

inline spectral::SpectralVelocity random_solenoidal(const spectral::GridPtr& g, std::mt19937_64& rng,
                                                    int kmax = 0) {
  return spectral::leray_project(random_velocity(g, rng, kmax));
}

/// max over both components of |a - b| coefficient-wise.
inline double max_difference(const spectral::SpectralVelocity& a, const spectral::SpectralVelocity& b) {
  return spectral::max_coefficient(a - b);
}

}  // namespace imex12::support
