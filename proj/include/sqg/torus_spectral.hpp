#pragma once

// Doubly periodic grid, scalar/vector fields, and the Fourier-multiplier
// operators of the critical SQG equation: Riesz-transform velocity, the
// half Laplacian (-Δ)^{1/2}, the gradient and the dealiased advection term.
//
// Layout: values are stored row-major, values[j*n + k] = θ(j·d/n, k·d/n),
// so j indexes x1 and k indexes x2. Spectral data uses the FFTW r2c layout
// n × (n/2+1) with lattice index m1 ∈ [-n/2, n/2) and m2 ∈ [0, n/2].

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdlib>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "sqg/errors.hpp"

namespace sqg {

template <class T, std::size_t Alignment = 64>
struct AlignedAllocator {
  using value_type = T;
  template <class U>
  struct rebind {
    using other = AlignedAllocator<U, Alignment>;
  };

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U, Alignment>&) noexcept {}

  T* allocate(std::size_t count) {
    std::size_t bytes = count * sizeof(T);
    bytes = (bytes + Alignment - 1) / Alignment * Alignment;
    void* p = std::aligned_alloc(Alignment, std::max<std::size_t>(bytes, Alignment));
    if (!p) throw std::bad_alloc();
    return static_cast<T*>(p);
  }
  void deallocate(T* p, std::size_t) noexcept { std::free(p); }

  template <class U>
  bool operator==(const AlignedAllocator<U, Alignment>&) const noexcept { return true; }
};

using RealBuffer = std::vector<double, AlignedAllocator<double>>;
using ComplexBuffer = std::vector<std::complex<double>, AlignedAllocator<std::complex<double>>>;

/// Square doubly periodic domain [0, d)^2 sampled on an n × n grid.
struct TorusGeometry {
  std::size_t n = 0;
  double d = 0.0;

  static TorusGeometry make(std::size_t n, double d) {
    TorusGeometry g{n, d};
    g.validate();
    return g;
  }

  void validate() const {
    if (n < 8 || n % 2 != 0)
      throw InputError("grid size n must be even and >= 8, got " + std::to_string(n));
    if (!(d > 0.0) || !std::isfinite(d))
      throw InputError("spatial period d must be positive and finite");
  }

  double spacing() const { return d / static_cast<double>(n); }
  /// 2π/d: physical wavenumber of lattice index 1.
  double wavenumber_unit() const { return 2.0 * std::numbers::pi / d; }
  std::size_t size() const { return n * n; }
  std::size_t spectral_cols() const { return n / 2 + 1; }
  std::size_t spectral_size() const { return n * spectral_cols(); }

  /// Signed lattice index for spectral row j, in [-n/2, n/2).
  std::ptrdiff_t row_index(std::size_t j) const {
    const auto sj = static_cast<std::ptrdiff_t>(j);
    const auto sn = static_cast<std::ptrdiff_t>(n);
    return j < n / 2 ? sj : sj - sn;
  }
  bool is_nyquist(std::size_t j, std::size_t k) const { return j == n / 2 || k == n / 2; }
  /// 2/3-rule: modes with max(|m1|, |m2|) > n/3 are aliased.
  bool is_dealiased_out(std::ptrdiff_t m1, std::ptrdiff_t m2) const {
    const auto m = std::max(std::abs(m1), std::abs(m2));
    return 3 * m > static_cast<std::ptrdiff_t>(n);
  }

  /// Torus-minimal Euclidean length of an integer grid displacement.
  double offset_distance(std::ptrdiff_t o1, std::ptrdiff_t o2) const {
    const auto wrap = [this](std::ptrdiff_t c) {
      const auto sn = static_cast<std::ptrdiff_t>(n);
      c %= sn;
      if (c < 0) c += sn;
      return std::min(c, sn - c);
    };
    const double a = static_cast<double>(wrap(o1));
    const double b = static_cast<double>(wrap(o2));
    return spacing() * std::hypot(a, b);
  }

  bool operator==(const TorusGeometry&) const = default;
};

/// Real periodic field sampled at x_{jk} = (j·d/n, k·d/n).
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(const TorusGeometry& g) : geometry_(g), values_(g.size(), 0.0) { g.validate(); }
  ScalarField(const TorusGeometry& g, RealBuffer values) : geometry_(g), values_(std::move(values)) {
    g.validate();
    if (values_.size() != g.size())
      throw StructuralError("field holds " + std::to_string(values_.size()) + " samples, geometry needs " +
                            std::to_string(g.size()));
  }

  template <class F>
  static ScalarField from_function(const TorusGeometry& g, F&& f) {
    ScalarField out(g);
    const double h = g.spacing();
    for (std::size_t j = 0; j < g.n; ++j)
      for (std::size_t k = 0; k < g.n; ++k)
        out.at(j, k) = f(static_cast<double>(j) * h, static_cast<double>(k) * h);
    return out;
  }

  static ScalarField constant(const TorusGeometry& g, double c) {
    ScalarField out(g);
    std::fill(out.values_.begin(), out.values_.end(), c);
    return out;
  }

  const TorusGeometry& geometry() const { return geometry_; }
  std::size_t n() const { return geometry_.n; }
  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }
  const RealBuffer& buffer() const { return values_; }

  double at(std::size_t j, std::size_t k) const { return values_[j * geometry_.n + k]; }
  double& at(std::size_t j, std::size_t k) { return values_[j * geometry_.n + k]; }

  bool is_finite() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
  }

  /// Same samples on a different geometry with equal n (used by rescaling).
  ScalarField reinterpreted(const TorusGeometry& g) const {
    if (g.n != geometry_.n) throw StructuralError("reinterpretation must keep grid size");
    return ScalarField(g, values_);
  }

  ScalarField& operator+=(const ScalarField& other) {
    require_same_geometry(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& other) {
    require_same_geometry(other);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
  }
  ScalarField& operator*=(double s) {
    for (auto& v : values_) v *= s;
    return *this;
  }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

  void require_same_geometry(const ScalarField& other) const {
    if (!(geometry_ == other.geometry_)) throw StructuralError("fields live on different geometries");
  }

 private:
  TorusGeometry geometry_{};
  RealBuffer values_;
};

struct VelocityField {
  ScalarField u1;
  ScalarField u2;

  const TorusGeometry& geometry() const { return u1.geometry(); }
};

/// Fourier coefficients in FFTW r2c layout; unnormalised (forward sum).
class SpectralField {
 public:
  explicit SpectralField(const TorusGeometry& g) : geometry_(g), coeffs_(g.spectral_size()) {}

  const TorusGeometry& geometry() const { return geometry_; }
  std::span<const std::complex<double>> coeffs() const { return coeffs_; }
  std::span<std::complex<double>> coeffs() { return coeffs_; }
  std::complex<double> at(std::size_t j, std::size_t k) const { return coeffs_[j * geometry_.spectral_cols() + k]; }
  std::complex<double>& at(std::size_t j, std::size_t k) { return coeffs_[j * geometry_.spectral_cols() + k]; }

  /// Multiply every coefficient by mult(m1, m2), with (m1, m2) the lattice index.
  template <class F>
  void apply(F&& mult) {
    const std::size_t cols = geometry_.spectral_cols();
    for (std::size_t j = 0; j < geometry_.n; ++j) {
      const auto m1 = geometry_.row_index(j);
      for (std::size_t k = 0; k < cols; ++k)
        coeffs_[j * cols + k] *= mult(j, k, m1, static_cast<std::ptrdiff_t>(k));
    }
  }

  void truncate_aliased() {
    apply([this](std::size_t, std::size_t, std::ptrdiff_t m1, std::ptrdiff_t m2) {
      return geometry_.is_dealiased_out(m1, m2) ? std::complex<double>(0.0) : std::complex<double>(1.0);
    });
  }

  SpectralField& operator+=(const SpectralField& o) {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }

 private:
  TorusGeometry geometry_;
  ComplexBuffer coeffs_;
};

namespace detail {

class FftPlans {
 public:
  explicit FftPlans(std::size_t n) {
    const int in = static_cast<int>(n);
    RealBuffer real(n * n);
    ComplexBuffer spec(n * (n / 2 + 1));
    auto* c = reinterpret_cast<fftw_complex*>(spec.data());
    forward_ = fftw_plan_dft_r2c_2d(in, in, real.data(), c, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_2d(in, in, c, real.data(), FFTW_ESTIMATE);
  }
  ~FftPlans() {
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }
  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

  void forward(double* in, std::complex<double>* out) const {
    fftw_execute_dft_r2c(forward_, in, reinterpret_cast<fftw_complex*>(out));
  }
  // Destroys `in`.
  void inverse(std::complex<double>* in, double* out) const {
    fftw_execute_dft_c2r(inverse_, reinterpret_cast<fftw_complex*>(in), out);
  }

 private:
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
};

// FFTW planning is not thread-safe; execution on fresh arrays is.
inline const FftPlans& plans_for(std::size_t n) {
  static std::mutex mutex;
  static std::map<std::size_t, std::unique_ptr<FftPlans>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FftPlans>(n);
  return *slot;
}

inline void require_finite(const ScalarField& f, const char* what) {
  if (!f.is_finite()) throw InputError(std::string(what) + ": field contains non-finite values");
}

}  // namespace detail

inline SpectralField forward(const ScalarField& theta) {
  const auto& g = theta.geometry();
  SpectralField out(g);
  RealBuffer scratch(theta.buffer());
  detail::plans_for(g.n).forward(scratch.data(), out.coeffs().data());
  return out;
}

inline ScalarField inverse(const SpectralField& spec) {
  const auto& g = spec.geometry();
  ComplexBuffer scratch(spec.coeffs().begin(), spec.coeffs().end());
  RealBuffer values(g.size());
  detail::plans_for(g.n).inverse(scratch.data(), values.data());
  const double norm = 1.0 / static_cast<double>(g.size());
  for (auto& v : values) v *= norm;
  return ScalarField(g, std::move(values));
}

// Spectral multipliers. Odd multipliers (i·k, Riesz) vanish on the Nyquist
// row/column so that outputs stay real.

inline SpectralField derivative_spectral(const SpectralField& theta_hat, int axis) {
  SpectralField out = theta_hat;
  const auto& g = theta_hat.geometry();
  const double unit = g.wavenumber_unit();
  out.apply([&](std::size_t j, std::size_t k, std::ptrdiff_t m1, std::ptrdiff_t m2) {
    if (g.is_nyquist(j, k)) return std::complex<double>(0.0);
    const double kk = unit * static_cast<double>(axis == 0 ? m1 : m2);
    return std::complex<double>(0.0, kk);
  });
  return out;
}

/// û = i(-k2, k1)/|k| θ̂, zero mean mode. Returns (û1, û2).
inline std::pair<SpectralField, SpectralField> riesz_velocity_spectral(const SpectralField& theta_hat) {
  const auto& g = theta_hat.geometry();
  SpectralField u1 = theta_hat;
  SpectralField u2 = theta_hat;
  const auto symbol = [&g](std::size_t j, std::size_t k, std::ptrdiff_t m1, std::ptrdiff_t m2, int comp) {
    if ((m1 == 0 && m2 == 0) || g.is_nyquist(j, k)) return std::complex<double>(0.0);
    const double a = static_cast<double>(m1);
    const double b = static_cast<double>(m2);
    const double mag = std::hypot(a, b);
    return std::complex<double>(0.0, comp == 0 ? -b / mag : a / mag);
  };
  u1.apply([&](std::size_t j, std::size_t k, std::ptrdiff_t m1, std::ptrdiff_t m2) { return symbol(j, k, m1, m2, 0); });
  u2.apply([&](std::size_t j, std::size_t k, std::ptrdiff_t m1, std::ptrdiff_t m2) { return symbol(j, k, m1, m2, 1); });
  return {std::move(u1), std::move(u2)};
}

/// |k| on every lattice mode (including Nyquist).
inline RealBuffer wavenumber_magnitudes(const TorusGeometry& g) {
  RealBuffer out(g.spectral_size());
  const std::size_t cols = g.spectral_cols();
  const double unit = g.wavenumber_unit();
  for (std::size_t j = 0; j < g.n; ++j) {
    const double m1 = static_cast<double>(g.row_index(j));
    for (std::size_t k = 0; k < cols; ++k) out[j * cols + k] = unit * std::hypot(m1, static_cast<double>(k));
  }
  return out;
}

inline SpectralField half_laplacian_spectral(const SpectralField& theta_hat) {
  SpectralField out = theta_hat;
  const double unit = theta_hat.geometry().wavenumber_unit();
  out.apply([unit](std::size_t, std::size_t, std::ptrdiff_t m1, std::ptrdiff_t m2) {
    return std::complex<double>(unit * std::hypot(static_cast<double>(m1), static_cast<double>(m2)));
  });
  return out;
}

inline VelocityField riesz_velocity(const ScalarField& theta) {
  detail::require_finite(theta, "riesz_velocity");
  auto [u1, u2] = riesz_velocity_spectral(forward(theta));
  return {inverse(u1), inverse(u2)};
}

/// (-Δ)^{1/2} θ, i.e. multiplier |k|.
inline ScalarField fractional_laplacian_half(const ScalarField& theta) {
  detail::require_finite(theta, "fractional_laplacian_half");
  return inverse(half_laplacian_spectral(forward(theta)));
}

inline VelocityField gradient(const ScalarField& theta) {
  detail::require_finite(theta, "gradient");
  const auto hat = forward(theta);
  return {inverse(derivative_spectral(hat, 0)), inverse(derivative_spectral(hat, 1))};
}

/// Spectral divergence ∂1 u1 + ∂2 u2.
inline ScalarField divergence(const VelocityField& u) {
  u.u1.require_same_geometry(u.u2);
  auto d1 = derivative_spectral(forward(u.u1), 0);
  d1 += derivative_spectral(forward(u.u2), 1);
  return inverse(d1);
}

/// Pseudospectral u·∇θ from spectral inputs. With `dealias`, each factor is
/// truncated to the 2/3 band before the physical product and the product is
/// truncated afterwards.
inline SpectralField advection_spectral(const SpectralField& u1_hat, const SpectralField& u2_hat,
                                        const SpectralField& theta_hat, bool dealias) {
  SpectralField a1 = u1_hat;
  SpectralField a2 = u2_hat;
  SpectralField g1 = derivative_spectral(theta_hat, 0);
  SpectralField g2 = derivative_spectral(theta_hat, 1);
  if (dealias) {
    a1.truncate_aliased();
    a2.truncate_aliased();
    g1.truncate_aliased();
    g2.truncate_aliased();
  }
  const ScalarField p1 = inverse(a1);
  const ScalarField p2 = inverse(a2);
  const ScalarField q1 = inverse(g1);
  const ScalarField q2 = inverse(g2);
  ScalarField prod(theta_hat.geometry());
  auto out = prod.values();
  const auto v1 = p1.values(), v2 = p2.values(), w1 = q1.values(), w2 = q2.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = v1[i] * w1[i] + v2[i] * w2[i];
  SpectralField result = forward(prod);
  if (dealias) result.truncate_aliased();
  return result;
}

inline ScalarField advection(const VelocityField& u, const ScalarField& theta, bool dealias = true) {
  u.u1.require_same_geometry(u.u2);
  u.u1.require_same_geometry(theta);
  detail::require_finite(theta, "advection");
  detail::require_finite(u.u1, "advection");
  detail::require_finite(u.u2, "advection");
  return inverse(advection_spectral(forward(u.u1), forward(u.u2), forward(theta), dealias));
}

inline double sup_norm(const ScalarField& theta) {
  detail::require_finite(theta, "sup_norm");
  double m = 0.0;
  for (double v : theta.values()) m = std::max(m, std::abs(v));
  return m;
}

/// Pointwise Euclidean magnitude sup of a vector field.
inline double sup_norm(const VelocityField& u) {
  double m = 0.0;
  const auto a = u.u1.values(), b = u.u2.values();
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::hypot(a[i], b[i]));
  return m;
}

inline double grad_sup_norm(const ScalarField& theta) { return sup_norm(gradient(theta)); }

inline double grid_mean(const ScalarField& theta) {
  double s = 0.0;
  for (double v : theta.values()) s += v;
  return s / static_cast<double>(theta.values().size());
}

/// Mean of θ²/2 over grid nodes.
inline double grid_energy(const ScalarField& theta) {
  double s = 0.0;
  for (double v : theta.values()) s += v * v;
  return 0.5 * s / static_cast<double>(theta.values().size());
}

/// Σ_x θ(x)ψ(x).
inline double grid_inner(const ScalarField& a, const ScalarField& b) {
  a.require_same_geometry(b);
  double s = 0.0;
  const auto x = a.values(), y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

/// (1/n²) Σ_m |θ̂_m|² over the full (Hermitian-completed) lattice; equals Σ_x θ² by Parseval.
inline double spectral_norm_sq(const SpectralField& hat) {
  const auto& g = hat.geometry();
  const std::size_t cols = g.spectral_cols();
  double s = 0.0;
  for (std::size_t j = 0; j < g.n; ++j)
    for (std::size_t k = 0; k < cols; ++k) {
      const double w = (k == 0 || k == g.n / 2) ? 1.0 : 2.0;
      s += w * std::norm(hat.at(j, k));
    }
  return s / static_cast<double>(g.size());
}

}  // namespace sqg
