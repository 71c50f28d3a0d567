#pragma once

// Fourier pseudo-spectral backend on the 2*pi-periodic square.
//
// Coefficients are stored on the full N x N lattice, row-major with the
// x-wavenumber as the slow index. A physical field u(x) maps to
//   u_hat(k) = N^-2 * sum_x u(x) exp(-i k.x),
// so cos(x) has coefficient 1/2 at k = (+-1, 0). The Nyquist row/column is
// never retained.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace imex12::spectral {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

namespace detail {

// The FFTW planner is not thread-safe; execution on new arrays is.
inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct PlanPair {
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit PlanPair(int n) {
    std::vector<Complex> scratch(static_cast<std::size_t>(n) * n);
    auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
    std::lock_guard lock(planner_mutex());
    forward = fftw_plan_dft_2d(n, n, data, data, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward = fftw_plan_dft_2d(n, n, data, data, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (forward == nullptr || backward == nullptr) {
      throw std::runtime_error("spectral: FFTW plan creation failed");
    }
  }
  PlanPair(const PlanPair&) = delete;
  PlanPair& operator=(const PlanPair&) = delete;
  ~PlanPair() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
  }
};

}  // namespace detail

/// Collocation grid and wavevector lattice for an N x N periodic box.
class Grid {
 public:
  explicit Grid(int n_modes) : n_(n_modes) {
    if (n_modes < 8 || n_modes % 2 != 0) {
      throw std::invalid_argument("spectral::Grid: n_modes must be even and >= 8");
    }
    plans_ = std::make_unique<detail::PlanPair>(n_);
  }

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(n_) * n_; }
  [[nodiscard]] double domain_length() const { return kTwoPi; }
  /// Collocation spacing; stands in for the mesh size h.
  [[nodiscard]] double h_equiv() const { return kTwoPi / n_; }
  [[nodiscard]] double area() const { return kTwoPi * kTwoPi; }

  /// Signed wavenumber of lattice index m, in {-N/2+1, ..., N/2}.
  [[nodiscard]] int wavenumber(int m) const { return m <= n_ / 2 ? m : m - n_; }
  [[nodiscard]] std::size_t index(int a, int b) const {
    return static_cast<std::size_t>(a) * n_ + static_cast<std::size_t>(b);
  }
  [[nodiscard]] std::size_t index_of_wavevector(int kx, int ky) const {
    return index((kx + n_) % n_, (ky + n_) % n_);
  }
  [[nodiscard]] bool is_nyquist(int a, int b) const { return a == n_ / 2 || b == n_ / 2; }

  /// 2/3 rule: |k_i| < N/3 in each direction.
  [[nodiscard]] bool dealias_keep(int a, int b) const {
    const int kx = std::abs(wavenumber(a));
    const int ky = std::abs(wavenumber(b));
    return 3 * kx < n_ && 3 * ky < n_;
  }

  [[nodiscard]] double x(int i) const { return kTwoPi * i / n_; }

  /// Physical samples -> coefficients (normalized by 1/N^2).
  void forward(std::span<const Complex> in, std::span<Complex> out) const {
    check_sizes(in.size(), out.size());
    std::copy(in.begin(), in.end(), out.begin());
    fftw_execute_dft(plans_->forward, reinterpret_cast<fftw_complex*>(out.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
    const double scale = 1.0 / static_cast<double>(size());
    for (auto& c : out) {
      c *= scale;
    }
  }

  /// Coefficients -> physical samples (unnormalized sum).
  void inverse(std::span<const Complex> in, std::span<Complex> out) const {
    check_sizes(in.size(), out.size());
    std::copy(in.begin(), in.end(), out.begin());
    fftw_execute_dft(plans_->backward, reinterpret_cast<fftw_complex*>(out.data()),
                     reinterpret_cast<fftw_complex*>(out.data()));
  }

 private:
  void check_sizes(std::size_t a, std::size_t b) const {
    if (a != size() || b != size()) {
      throw std::invalid_argument("spectral::Grid: transform size mismatch");
    }
  }

  int n_;
  std::unique_ptr<detail::PlanPair> plans_;
};

using GridPtr = std::shared_ptr<const Grid>;

[[nodiscard]] inline GridPtr make_grid(int n_modes) { return std::make_shared<const Grid>(n_modes); }

namespace detail {

inline void require_same_grid(const GridPtr& a, const GridPtr& b, const char* what) {
  if (!a || !b || (a != b && a->n() != b->n())) {
    throw std::invalid_argument(std::string("spectral: grid mismatch in ") + what);
  }
}

}  // namespace detail

/// Velocity as two coefficient arrays (one per component).
struct SpectralVelocity {
  GridPtr grid;
  std::array<std::vector<Complex>, 2> coeffs;

  SpectralVelocity() = default;
  explicit SpectralVelocity(GridPtr g) : grid(std::move(g)) {
    coeffs[0].assign(grid->size(), Complex{});
    coeffs[1].assign(grid->size(), Complex{});
  }

  [[nodiscard]] std::size_t size() const { return coeffs[0].size(); }

  SpectralVelocity& operator+=(const SpectralVelocity& o) {
    detail::require_same_grid(grid, o.grid, "velocity +=");
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < size(); ++i) {
        coeffs[c][i] += o.coeffs[c][i];
      }
    }
    return *this;
  }
  SpectralVelocity& operator-=(const SpectralVelocity& o) {
    detail::require_same_grid(grid, o.grid, "velocity -=");
    for (int c = 0; c < 2; ++c) {
      for (std::size_t i = 0; i < size(); ++i) {
        coeffs[c][i] -= o.coeffs[c][i];
      }
    }
    return *this;
  }
  SpectralVelocity& operator*=(double s) {
    for (auto& comp : coeffs) {
      for (auto& c : comp) {
        c *= s;
      }
    }
    return *this;
  }

  friend bool operator==(const SpectralVelocity& a, const SpectralVelocity& b) {
    return a.coeffs == b.coeffs;
  }
};

[[nodiscard]] inline SpectralVelocity operator+(SpectralVelocity a, const SpectralVelocity& b) { return a += b; }
[[nodiscard]] inline SpectralVelocity operator-(SpectralVelocity a, const SpectralVelocity& b) { return a -= b; }
[[nodiscard]] inline SpectralVelocity operator*(double s, SpectralVelocity a) { return a *= s; }

/// Zero-mean pressure coefficients.
struct SpectralPressure {
  GridPtr grid;
  std::vector<Complex> coeffs;

  SpectralPressure() = default;
  explicit SpectralPressure(GridPtr g) : grid(std::move(g)) { coeffs.assign(grid->size(), Complex{}); }

  SpectralPressure& operator+=(const SpectralPressure& o) {
    detail::require_same_grid(grid, o.grid, "pressure +=");
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      coeffs[i] += o.coeffs[i];
    }
    return *this;
  }
  SpectralPressure& operator-=(const SpectralPressure& o) {
    detail::require_same_grid(grid, o.grid, "pressure -=");
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      coeffs[i] -= o.coeffs[i];
    }
    return *this;
  }
  SpectralPressure& operator*=(double s) {
    for (auto& c : coeffs) {
      c *= s;
    }
    return *this;
  }

  friend bool operator==(const SpectralPressure& a, const SpectralPressure& b) { return a.coeffs == b.coeffs; }
};

[[nodiscard]] inline SpectralPressure operator+(SpectralPressure a, const SpectralPressure& b) { return a += b; }
[[nodiscard]] inline SpectralPressure operator-(SpectralPressure a, const SpectralPressure& b) { return a -= b; }
[[nodiscard]] inline SpectralPressure operator*(double s, SpectralPressure a) { return a *= s; }

/// Real samples on the collocation grid, one array per component.
struct PhysicalField {
  GridPtr grid;
  std::vector<std::vector<double>> components;

  PhysicalField() = default;
  PhysicalField(GridPtr g, int n_components) : grid(std::move(g)) {
    components.assign(static_cast<std::size_t>(n_components), std::vector<double>(grid->size(), 0.0));
  }
};

// ---------------------------------------------------------------------------
// Transforms

namespace detail {

inline std::vector<Complex> to_coeffs(const Grid& g, std::span<const double> samples) {
  if (samples.size() != g.size()) {
    throw std::invalid_argument("spectral: physical field size mismatch");
  }
  std::vector<Complex> in(samples.begin(), samples.end());
  std::vector<Complex> out(g.size());
  g.forward(in, out);
  for (int a = 0; a < g.n(); ++a) {
    for (int b = 0; b < g.n(); ++b) {
      if (g.is_nyquist(a, b)) {
        out[g.index(a, b)] = {};
      }
    }
  }
  return out;
}

inline std::vector<double> to_samples(const Grid& g, std::span<const Complex> coeffs) {
  if (coeffs.size() != g.size()) {
    throw std::invalid_argument("spectral: coefficient array size mismatch");
  }
  std::vector<Complex> out(g.size());
  g.inverse(coeffs, out);
  std::vector<double> re(g.size());
  std::transform(out.begin(), out.end(), re.begin(), [](Complex c) { return c.real(); });
  return re;
}

inline void dealias(const Grid& g, std::vector<Complex>& c) {
  for (int a = 0; a < g.n(); ++a) {
    for (int b = 0; b < g.n(); ++b) {
      if (!g.dealias_keep(a, b)) {
        c[g.index(a, b)] = {};
      }
    }
  }
}

// i * k_dir * c
inline std::vector<Complex> derivative(const Grid& g, const std::vector<Complex>& c, int dir) {
  std::vector<Complex> d(c.size());
  for (int a = 0; a < g.n(); ++a) {
    for (int b = 0; b < g.n(); ++b) {
      const std::size_t i = g.index(a, b);
      if (g.is_nyquist(a, b)) {
        continue;
      }
      const double k = dir == 0 ? g.wavenumber(a) : g.wavenumber(b);
      d[i] = Complex(0.0, k) * c[i];
    }
  }
  return d;
}

}  // namespace detail

[[nodiscard]] inline PhysicalField to_physical(const SpectralVelocity& v) {
  PhysicalField f(v.grid, 2);
  for (int c = 0; c < 2; ++c) {
    f.components[c] = detail::to_samples(*v.grid, v.coeffs[c]);
  }
  return f;
}

[[nodiscard]] inline PhysicalField to_physical(const SpectralPressure& p) {
  PhysicalField f(p.grid, 1);
  f.components[0] = detail::to_samples(*p.grid, p.coeffs);
  return f;
}

[[nodiscard]] inline SpectralVelocity to_spectral_velocity(const PhysicalField& f) {
  if (f.components.size() != 2) {
    throw std::invalid_argument("spectral: velocity needs two components");
  }
  SpectralVelocity v(f.grid);
  for (int c = 0; c < 2; ++c) {
    v.coeffs[c] = detail::to_coeffs(*f.grid, f.components[c]);
  }
  return v;
}

[[nodiscard]] inline SpectralPressure to_spectral_pressure(const PhysicalField& f) {
  if (f.components.size() != 1) {
    throw std::invalid_argument("spectral: pressure needs one component");
  }
  SpectralPressure p(f.grid);
  p.coeffs = detail::to_coeffs(*f.grid, f.components[0]);
  return p;
}

using VectorFunction = std::function<std::array<double, 2>(double x, double y)>;
using ScalarFunction = std::function<double(double x, double y)>;

[[nodiscard]] inline SpectralVelocity sample_velocity(const GridPtr& g, const VectorFunction& fn) {
  PhysicalField f(g, 2);
  for (int i = 0; i < g->n(); ++i) {
    for (int j = 0; j < g->n(); ++j) {
      const auto val = fn(g->x(i), g->x(j));
      f.components[0][g->index(i, j)] = val[0];
      f.components[1][g->index(i, j)] = val[1];
    }
  }
  return to_spectral_velocity(f);
}

[[nodiscard]] inline SpectralPressure sample_pressure(const GridPtr& g, const ScalarFunction& fn) {
  PhysicalField f(g, 1);
  for (int i = 0; i < g->n(); ++i) {
    for (int j = 0; j < g->n(); ++j) {
      f.components[0][g->index(i, j)] = fn(g->x(i), g->x(j));
    }
  }
  return to_spectral_pressure(f);
}

[[nodiscard]] inline SpectralVelocity dealiased(SpectralVelocity v) {
  for (auto& c : v.coeffs) {
    detail::dealias(*v.grid, c);
  }
  return v;
}

// ---------------------------------------------------------------------------
// Projection and structure checks

/// Per-mode P_k = I - k k^T / |k|^2; the mean mode is zeroed.
[[nodiscard]] inline SpectralVelocity leray_project(const SpectralVelocity& v) {
  const Grid& g = *v.grid;
  SpectralVelocity out(v.grid);
  for (int a = 0; a < g.n(); ++a) {
    for (int b = 0; b < g.n(); ++b) {
      const std::size_t i = g.index(a, b);
      const double kx = g.wavenumber(a);
      const double ky = g.wavenumber(b);
      const double k2 = kx * kx + ky * ky;
      if (k2 == 0.0) {
        continue;
      }
      const Complex kdotv = kx * v.coeffs[0][i] + ky * v.coeffs[1][i];
      out.coeffs[0][i] = v.coeffs[0][i] - kx * kdotv / k2;
      out.coeffs[1][i] = v.coeffs[1][i] - ky * kdotv / k2;
    }
  }
  return out;
}

/// max_k |k . v_hat(k)|, the spectral divergence residual.
[[nodiscard]] inline double max_divergence(const SpectralVelocity& v) {
  const Grid& g = *v.grid;
  double worst = 0.0;
  for (int a = 0; a < g.n(); ++a) {
    for (int b = 0; b < g.n(); ++b) {
      const std::size_t i = g.index(a, b);
      const double kx = g.wavenumber(a);
      const double ky = g.wavenumber(b);
      worst = std::max(worst, std::abs(kx * v.coeffs[0][i] + ky * v.coeffs[1][i]));
    }
  }
  return worst;
}

/// Largest coefficient magnitude; the scale against which round-off is judged.
[[nodiscard]] inline double max_coefficient(const SpectralVelocity& v) {
  double m = 0.0;
  for (const auto& comp : v.coeffs) {
    for (const auto& c : comp) {
      m = std::max(m, std::abs(c));
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Nonlinearity

/// N(u, v) = 1/2 u.grad v + 1/2 div(u (x) v), formed pseudo-spectrally with
/// the 2/3 rule applied to the inputs and to the result. For dealiased
/// inputs (N(u, v), w) = b*(u, v, w) exactly.
[[nodiscard]] inline SpectralVelocity nonlinear_term(const SpectralVelocity& u, const SpectralVelocity& v) {
  detail::require_same_grid(u.grid, v.grid, "nonlinear_term");
  const Grid& g = *u.grid;
  const std::size_t n = g.size();

  std::array<std::vector<double>, 2> up;
  std::array<std::vector<double>, 2> vp;
  std::array<std::array<std::vector<double>, 2>, 2> grad_v;  // [component][direction]
  for (int c = 0; c < 2; ++c) {
    auto uc = u.coeffs[c];
    auto vc = v.coeffs[c];
    detail::dealias(g, uc);
    detail::dealias(g, vc);
    up[c] = detail::to_samples(g, uc);
    vp[c] = detail::to_samples(g, vc);
    for (int d = 0; d < 2; ++d) {
      grad_v[c][d] = detail::to_samples(g, detail::derivative(g, vc, d));
    }
  }

  SpectralVelocity out(u.grid);
  std::vector<Complex> buf(n);
  std::vector<Complex> hat(n);
  for (int c = 0; c < 2; ++c) {
    // Convective part u . grad v_c.
    for (std::size_t i = 0; i < n; ++i) {
      buf[i] = up[0][i] * grad_v[c][0][i] + up[1][i] * grad_v[c][1][i];
    }
    g.forward(buf, hat);
    std::vector<Complex> conv = hat;

    // Divergence part sum_d d_d (u_d v_c).
    std::vector<Complex> div(n);
    for (int d = 0; d < 2; ++d) {
      for (std::size_t i = 0; i < n; ++i) {
        buf[i] = up[d][i] * vp[c][i];
      }
      g.forward(buf, hat);
      const auto dh = detail::derivative(g, hat, d);
      for (std::size_t i = 0; i < n; ++i) {
        div[i] += dh[i];
      }
    }

    auto& res = out.coeffs[c];
    for (std::size_t i = 0; i < n; ++i) {
      res[i] = 0.5 * conv[i] + 0.5 * div[i];
    }
    for (int a = 0; a < g.n(); ++a) {
      for (int b = 0; b < g.n(); ++b) {
        if (g.is_nyquist(a, b)) {
          res[g.index(a, b)] = {};
        }
      }
    }
    detail::dealias(g, res);
  }
  return out;
}

[[nodiscard]] inline SpectralVelocity nonlinear_term(const SpectralVelocity& v) { return nonlinear_term(v, v); }

// ---------------------------------------------------------------------------
// Inner products and norms

/// L2 inner product over the 2*pi square, via Parseval.
[[nodiscard]] inline double inner_product(const SpectralVelocity& a, const SpectralVelocity& b) {
  detail::require_same_grid(a.grid, b.grid, "inner_product");
  double s = 0.0;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      s += (a.coeffs[c][i] * std::conj(b.coeffs[c][i])).real();
    }
  }
  return a.grid->area() * s;
}

/// The discrete trilinear form (N(u, v), w).
[[nodiscard]] inline double nonlinear_form(const SpectralVelocity& u, const SpectralVelocity& v,
                                           const SpectralVelocity& w) {
  return inner_product(nonlinear_term(u, v), w);
}

struct Norms {
  double l2 = 0.0;
  double grad_l2 = 0.0;
  double h_minus1 = 0.0;
  double linf = 0.0;
};

namespace detail {

inline double weighted_sum(const SpectralVelocity& v, int power) {
  const Grid& g = *v.grid;
  double s = 0.0;
  for (int a = 0; a < g.n(); ++a) {
    for (int b = 0; b < g.n(); ++b) {
      const std::size_t i = g.index(a, b);
      const double kx = g.wavenumber(a);
      const double ky = g.wavenumber(b);
      const double k2 = kx * kx + ky * ky;
      const double m2 = std::norm(v.coeffs[0][i]) + std::norm(v.coeffs[1][i]);
      if (power == 0) {
        s += m2;
      } else if (k2 > 0.0) {
        s += power > 0 ? k2 * m2 : m2 / k2;
      }
    }
  }
  return s;
}

}  // namespace detail

[[nodiscard]] inline double l2_norm(const SpectralVelocity& v) {
  return std::sqrt(v.grid->area() * detail::weighted_sum(v, 0));
}

[[nodiscard]] inline double grad_l2_norm(const SpectralVelocity& v) {
  return std::sqrt(v.grid->area() * detail::weighted_sum(v, 1));
}

/// sup_v (f, v) / ||grad v||; requires a zero-mean field.
[[nodiscard]] inline double h_minus1_norm(const SpectralVelocity& v) {
  const double mean = std::hypot(std::abs(v.coeffs[0][0]), std::abs(v.coeffs[1][0]));
  if (mean > 1e-12 * std::max(1.0, max_coefficient(v))) {
    throw std::invalid_argument("spectral::h_minus1_norm: field has nonzero mean");
  }
  return std::sqrt(v.grid->area() * detail::weighted_sum(v, -1));
}

[[nodiscard]] inline double linf_norm(const SpectralVelocity& v) {
  const auto f = to_physical(v);
  double m = 0.0;
  for (std::size_t i = 0; i < f.components[0].size(); ++i) {
    m = std::max(m, std::hypot(f.components[0][i], f.components[1][i]));
  }
  return m;
}

[[nodiscard]] inline Norms norms(const SpectralVelocity& v) {
  return {l2_norm(v), grad_l2_norm(v), h_minus1_norm(v), linf_norm(v)};
}

[[nodiscard]] inline double l2_norm(const SpectralPressure& p) {
  double s = 0.0;
  for (const auto& c : p.coeffs) {
    s += std::norm(c);
  }
  return std::sqrt(p.grid->area() * s);
}

/// Trapezoid (= spectrally exact) quadrature of |v|^2 on the collocation grid.
[[nodiscard]] inline double physical_l2_norm(const PhysicalField& f) {
  double s = 0.0;
  for (const auto& comp : f.components) {
    for (double x : comp) {
      s += x * x;
    }
  }
  return std::sqrt(s * f.grid->area() / static_cast<double>(f.grid->size()));
}

// ---------------------------------------------------------------------------
// Shifted Stokes solve

/// Solves (1/dt) u + nu A u + grad p = r, div u = 0 mode by mode:
///   u_k = P_k r_k / (1/dt + nu |k|^2),  p_k = -i (k . r_k) / |k|^2.
[[nodiscard]] inline std::pair<SpectralVelocity, SpectralPressure> stokes_solve(const SpectralVelocity& rhs,
                                                                                double dt, double nu) {
  if (!(dt > 0.0) || !(nu > 0.0)) {
    throw std::invalid_argument("spectral::stokes_solve: dt and nu must be positive");
  }
  const Grid& g = *rhs.grid;
  SpectralVelocity u(rhs.grid);
  SpectralPressure p(rhs.grid);
  for (int a = 0; a < g.n(); ++a) {
    for (int b = 0; b < g.n(); ++b) {
      const std::size_t i = g.index(a, b);
      const double kx = g.wavenumber(a);
      const double ky = g.wavenumber(b);
      const double k2 = kx * kx + ky * ky;
      if (k2 == 0.0) {
        continue;
      }
      const Complex r0 = rhs.coeffs[0][i];
      const Complex r1 = rhs.coeffs[1][i];
      const Complex kdotr = kx * r0 + ky * r1;
      const double shift = 1.0 / dt + nu * k2;
      u.coeffs[0][i] = (r0 - kx * kdotr / k2) / shift;
      u.coeffs[1][i] = (r1 - ky * kdotr / k2) / shift;
      p.coeffs[i] = Complex(0.0, -1.0) * kdotr / k2;
    }
  }
  return {std::move(u), std::move(p)};
}

/// A v = -Laplacian v, i.e. |k|^2 v_hat.
[[nodiscard]] inline SpectralVelocity stokes_operator(const SpectralVelocity& v) {
  const Grid& g = *v.grid;
  SpectralVelocity out(v.grid);
  for (int a = 0; a < g.n(); ++a) {
    for (int b = 0; b < g.n(); ++b) {
      const std::size_t i = g.index(a, b);
      const double kx = g.wavenumber(a);
      const double ky = g.wavenumber(b);
      const double k2 = kx * kx + ky * ky;
      out.coeffs[0][i] = k2 * v.coeffs[0][i];
      out.coeffs[1][i] = k2 * v.coeffs[1][i];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Field dump

/// CSV of physical samples: header "N,t,component" line, then N rows of N
/// values (row index = x index).
inline void write_field_csv(const std::string& path, const PhysicalField& f, double t, int component) {
  if (component < 0 || static_cast<std::size_t>(component) >= f.components.size()) {
    throw std::invalid_argument("spectral::write_field_csv: bad component");
  }
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("spectral::write_field_csv: cannot open " + path);
  }
  os.precision(17);
  const int n = f.grid->n();
  os << "# N=" << n << ",t=" << t << ",component=" << component << '\n';
  const auto& data = f.components[static_cast<std::size_t>(component)];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      os << data[f.grid->index(i, j)] << (j + 1 < n ? ',' : '\n');
    }
  }
}

// ---------------------------------------------------------------------------
// Backend

/// Realizes the time stepper's backend contract on the periodic square.
class SpectralBackend {
 public:
  using Velocity = SpectralVelocity;
  using Pressure = SpectralPressure;

  struct Options {
    /// Turn off N(u) for linear Stokes verification problems.
    bool nonlinear = true;
  };

  explicit SpectralBackend(int n_modes) : SpectralBackend(n_modes, Options{}) {}
  SpectralBackend(int n_modes, Options opts) : grid_(make_grid(n_modes)), opts_(opts) {}
  SpectralBackend(GridPtr grid, Options opts) : grid_(std::move(grid)), opts_(opts) {}

  [[nodiscard]] const GridPtr& grid() const { return grid_; }
  [[nodiscard]] double h_equiv() const { return grid_->h_equiv(); }

  [[nodiscard]] Velocity zero_velocity() const { return Velocity(grid_); }
  [[nodiscard]] Pressure zero_pressure() const { return Pressure(grid_); }

  [[nodiscard]] std::pair<Velocity, Pressure> stokes_solve(const Velocity& rhs, double dt, double nu) const {
    return spectral::stokes_solve(rhs, dt, nu);
  }
  [[nodiscard]] Velocity nonlinear(const Velocity& v) const {
    return opts_.nonlinear ? nonlinear_term(v) : zero_velocity();
  }
  [[nodiscard]] Velocity stokes_operator(const Velocity& v) const { return spectral::stokes_operator(v); }
  [[nodiscard]] Velocity project(const Velocity& v) const { return leray_project(v); }

  [[nodiscard]] double l2_norm(const Velocity& v) const { return spectral::l2_norm(v); }
  [[nodiscard]] double grad_l2_norm(const Velocity& v) const { return spectral::grad_l2_norm(v); }
  [[nodiscard]] double h_minus1_norm(const Velocity& v) const { return spectral::h_minus1_norm(v); }
  [[nodiscard]] double l2_norm(const Pressure& p) const { return spectral::l2_norm(p); }

  [[nodiscard]] Velocity sample_velocity(const VectorFunction& fn) const {
    return spectral::sample_velocity(grid_, fn);
  }
  [[nodiscard]] Pressure sample_pressure(const ScalarFunction& fn) const {
    return spectral::sample_pressure(grid_, fn);
  }

 private:
  GridPtr grid_;
  Options opts_;
};

}  // namespace imex12::spectral
