#pragma once

// Forcing, right-hand side and time integration of
//
//   ∂t θ = u·∇θ − (−Δ)^{1/2} θ + f,    u = (−R₂θ, R₁θ),
//
// with the advection sign exactly as written above. Time stepping is
// integrating-factor RK4: the dissipation semigroup e^{−|k|dt} is applied
// exactly, the advection + forcing part is advanced with classical RK4.

#include <cmath>
#include <functional>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sqg/errors.hpp"
#include "sqg/torus_spectral.hpp"

namespace sqg {

/// One forcing term a·sin((2π/D) m·x + σt + φ).
struct ForcingMode {
  double amplitude = 0.0;
  int m1 = 0;
  int m2 = 0;
  double sigma = 0.0;
  double phase = 0.0;

  bool operator==(const ForcingMode&) const = default;
};

/// Finite trigonometric forcing with spatial period d.
struct ForcingSpec {
  std::vector<ForcingMode> modes;
  double d = 2.0 * std::numbers::pi;

  void validate() const {
    if (!(d > 0.0) || !std::isfinite(d)) throw InputError("forcing: period must be positive and finite");
    for (const auto& m : modes)
      if (!std::isfinite(m.amplitude) || !std::isfinite(m.sigma) || !std::isfinite(m.phase))
        throw InputError("forcing: non-finite mode parameters");
  }

  /// Rejects modes the grid cannot represent (|m_i| >= n/2) or a period mismatch.
  void validate_on(const TorusGeometry& g) const {
    validate();
    if (std::abs(d - g.d) > 1e-12 * g.d) throw StructuralError("forcing period does not match geometry period");
    const auto limit = static_cast<long>(g.n / 2);
    for (const auto& m : modes)
      if (std::abs(static_cast<long>(m.m1)) >= limit || std::abs(static_cast<long>(m.m2)) >= limit)
        throw InputError("forcing: wavevector (" + std::to_string(m.m1) + "," + std::to_string(m.m2) +
                         ") at or beyond Nyquist for n = " + std::to_string(g.n));
  }

  /// ‖f‖_∞ ≤ Σ|a_j|.
  double sup_bound() const {
    double s = 0.0;
    for (const auto& m : modes) s += std::abs(m.amplitude);
    return s;
  }

  double value(double x1, double x2, double t) const {
    const double unit = 2.0 * std::numbers::pi / d;
    double s = 0.0;
    for (const auto& m : modes)
      s += m.amplitude * std::sin(unit * (m.m1 * x1 + m.m2 * x2) + m.sigma * t + m.phase);
    return s;
  }

  bool operator==(const ForcingSpec&) const = default;
};

inline ScalarField eval_forcing(const ForcingSpec& spec, const TorusGeometry& g, double t) {
  spec.validate_on(g);
  ScalarField out(g);
  if (spec.modes.empty()) return out;
  const double unit = g.wavenumber_unit();
  const double h = g.spacing();
  for (const auto& m : spec.modes) {
    const double c1 = unit * m.m1 * h;
    const double c2 = unit * m.m2 * h;
    const double shift = m.sigma * t + m.phase;
    for (std::size_t j = 0; j < g.n; ++j)
      for (std::size_t k = 0; k < g.n; ++k)
        out.at(j, k) += m.amplitude * std::sin(c1 * static_cast<double>(j) + c2 * static_cast<double>(k) + shift);
  }
  return out;
}

/// Hölder pair for |f(x,t) − f(y,t)| ≤ C₁|x − y|^α.
struct HolderConstants {
  double c1 = 0.0;
  double alpha = 1.0;
};

/// Lipschitz bound C₁ = Σ|a_j|·|k_j|, α = 1.
inline HolderConstants holder_constants(const ForcingSpec& spec) {
  spec.validate();
  const double unit = 2.0 * std::numbers::pi / spec.d;
  HolderConstants hc;
  for (const auto& m : spec.modes)
    hc.c1 += std::abs(m.amplitude) * unit * std::hypot(static_cast<double>(m.m1), static_cast<double>(m.m2));
  return hc;
}

struct HolderCertificate {
  bool passed = true;
  double worst_ratio = 0.0;  // max |Δf| / (C₁|x−y|^α); ≤ 1 when certified
  double witness_distance = 0.0;
  std::size_t samples = 0;
};

/// Random-pair check of the Hölder pair. Half the pairs are at log-uniform
/// small separations, where a Lipschitz bound is sharpest.
inline HolderCertificate certify_holder(const ForcingSpec& spec, const HolderConstants& hc, std::size_t samples,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(0.0, spec.d);
  std::uniform_real_distribution<double> time(0.0, 10.0 * spec.d);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  HolderCertificate cert;
  cert.samples = samples;
  const auto torus = [&](double a, double b) {
    double diff = std::fmod(std::abs(a - b), spec.d);
    return std::min(diff, spec.d - diff);
  };
  for (std::size_t i = 0; i < samples; ++i) {
    const double x1 = pos(rng), x2 = pos(rng), t = time(rng);
    double y1, y2;
    if (i % 2 == 0) {
      y1 = pos(rng);
      y2 = pos(rng);
    } else {
      const double r = spec.d * std::pow(10.0, -8.0 * unit(rng));
      const double ang = 2.0 * std::numbers::pi * unit(rng);
      y1 = x1 + r * std::cos(ang);
      y2 = x2 + r * std::sin(ang);
    }
    const double dist = std::hypot(torus(x1, y1), torus(x2, y2));
    if (dist == 0.0) continue;
    const double lhs = std::abs(spec.value(x1, x2, t) - spec.value(y1, y2, t));
    const double rhs = hc.c1 * std::pow(dist, hc.alpha);
    // Roundoff in f itself sets a floor below which the comparison is meaningless.
    const double slack = 1e-13 * (spec.sup_bound() + 1.0);
    const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > slack ? std::numeric_limits<double>::infinity() : 0.0);
    if (ratio > cert.worst_ratio && lhs > slack) {
      cert.worst_ratio = ratio;
      cert.witness_distance = dist;
    }
    if (lhs > rhs + slack) cert.passed = false;
  }
  return cert;
}

/// A source term f(·, t): either a trigonometric spec or an arbitrary callable.
class Forcing {
 public:
  using Callable = std::function<ScalarField(const TorusGeometry&, double)>;

  Forcing() = default;
  Forcing(ForcingSpec spec) : spec_(std::move(spec)) {}  // NOLINT(implicit)
  explicit Forcing(Callable fn) : fn_(std::move(fn)) {}

  ScalarField evaluate(const TorusGeometry& g, double t) const {
    if (fn_) return fn_(g, t);
    return eval_forcing(spec_, g, t);
  }
  bool is_zero() const { return !fn_ && spec_.modes.empty(); }

 private:
  ForcingSpec spec_{};
  Callable fn_;
};

struct SimConfig {
  double cfl_factor = 0.5;
  double t_end = 1.0;
  std::size_t output_stride = 10;
  bool dealias = true;
  double dt_max = 0.01;

  void validate() const {
    if (!(cfl_factor > 0.0 && cfl_factor <= 1.0)) throw InputError("sim: cfl_factor must lie in (0, 1]");
    if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw InputError("sim: t_end must be >= 0");
    if (output_stride == 0) throw InputError("sim: output stride must be >= 1");
    if (!(dt_max > 0.0)) throw InputError("sim: dt_max must be > 0");
  }
};

struct SimState {
  ScalarField theta;
  double t = 0.0;
};

inline constexpr double kVelocityFloor = 1e-8;

namespace detail {

inline SpectralField nonlinear_term(const SpectralField& theta_hat, const Forcing& forcing, double t, bool dealias) {
  auto [u1, u2] = riesz_velocity_spectral(theta_hat);
  SpectralField out = advection_spectral(u1, u2, theta_hat, dealias);
  if (!forcing.is_zero()) out += forward(forcing.evaluate(theta_hat.geometry(), t));
  return out;
}

}  // namespace detail

/// u·∇θ − Λθ + f(·, t).
inline ScalarField rhs(const SimState& state, const Forcing& forcing, bool dealias = true) {
  detail::require_finite(state.theta, "rhs");
  const auto hat = forward(state.theta);
  SpectralField total = detail::nonlinear_term(hat, forcing, state.t, dealias);
  const auto lap = half_laplacian_spectral(hat);
  auto out = total.coeffs();
  const auto l = lap.coeffs();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= l[i];
  return inverse(total);
}

/// Advective CFL limit cfl·(d/n)/max(sup|u|, 1e-8).
inline double cfl_limit(const ScalarField& theta, double cfl_factor) {
  const double umax = sup_norm(riesz_velocity(theta));
  return cfl_factor * theta.geometry().spacing() / std::max(umax, kVelocityFloor);
}

/// One integrating-factor RK4 step. Throws CflViolation if dt exceeds the limit.
inline SimState step(const SimState& state, const Forcing& forcing, double dt, double cfl_factor = 0.5,
                     bool dealias = true) {
  detail::require_finite(state.theta, "step");
  if (!(dt > 0.0)) throw InputError("step: dt must be > 0");
  const double limit = cfl_limit(state.theta, cfl_factor);
  if (dt > limit) throw CflViolation(dt, limit);

  const auto& g = state.theta.geometry();
  const auto kmag = wavenumber_magnitudes(g);
  const std::size_t size = kmag.size();
  RealBuffer e_full(size), e_half(size);
  for (std::size_t i = 0; i < size; ++i) {
    e_full[i] = std::exp(-kmag[i] * dt);
    e_half[i] = std::exp(-kmag[i] * 0.5 * dt);
  }

  const SpectralField v0 = forward(state.theta);
  const double t0 = state.t;
  const auto c0 = v0.coeffs();

  const SpectralField a = detail::nonlinear_term(v0, forcing, t0, dealias);
  SpectralField va(g);
  for (std::size_t i = 0; i < size; ++i) va.coeffs()[i] = e_half[i] * (c0[i] + 0.5 * dt * a.coeffs()[i]);

  const SpectralField b = detail::nonlinear_term(va, forcing, t0 + 0.5 * dt, dealias);
  SpectralField vb(g);
  for (std::size_t i = 0; i < size; ++i) vb.coeffs()[i] = e_half[i] * c0[i] + 0.5 * dt * b.coeffs()[i];

  const SpectralField c = detail::nonlinear_term(vb, forcing, t0 + 0.5 * dt, dealias);
  SpectralField vc(g);
  for (std::size_t i = 0; i < size; ++i) vc.coeffs()[i] = e_full[i] * c0[i] + dt * e_half[i] * c.coeffs()[i];

  const SpectralField dd = detail::nonlinear_term(vc, forcing, t0 + dt, dealias);
  SpectralField next(g);
  for (std::size_t i = 0; i < size; ++i)
    next.coeffs()[i] = e_full[i] * c0[i] + dt / 6.0 *
                                               (e_full[i] * a.coeffs()[i] +
                                                2.0 * e_half[i] * (b.coeffs()[i] + c.coeffs()[i]) + dd.coeffs()[i]);
  return {inverse(next), t0 + dt};
}

/// One row of the trajectory CSV.
struct Sample {
  double t = 0.0;
  double sup_theta = 0.0;
  double grad_sup = 0.0;
  double deficit = std::numeric_limits<double>::quiet_NaN();
  double energy = 0.0;
};

struct RunHooks {
  /// Modulus deficit of a state; NaN in the CSV when absent.
  std::function<double(const SimState&)> deficit;
  /// Called for every sample after the diagnostics are filled in.
  std::function<void(const SimState&, const Sample&)> on_sample;
};

struct Trajectory {
  std::vector<Sample> samples;
  SimState final_state;  // last finite state
  bool completed = true;
  std::string failure;
  std::size_t steps = 0;
};

/// Integrates from t = 0 to config.t_end with dt = min(CFL limit, dt_max, remaining),
/// sampling at t = 0, every `output_stride` steps, and at t_end.
inline Trajectory run(const ScalarField& theta0, const Forcing& forcing, const SimConfig& config,
                      const RunHooks& hooks = {}) {
  config.validate();
  detail::require_finite(theta0, "run");
  Trajectory traj;
  SimState state{theta0, 0.0};

  const auto sample = [&](const SimState& s) {
    Sample row;
    row.t = s.t;
    row.sup_theta = sup_norm(s.theta);
    row.grad_sup = grad_sup_norm(s.theta);
    row.energy = grid_energy(s.theta);
    if (hooks.deficit) row.deficit = hooks.deficit(s);
    traj.samples.push_back(row);
    if (hooks.on_sample) hooks.on_sample(s, row);
  };

  sample(state);
  std::size_t since_output = 0;
  while (state.t < config.t_end) {
    const double remaining = config.t_end - state.t;
    double dt = std::min(cfl_limit(state.theta, config.cfl_factor), config.dt_max);
    const bool last = dt >= remaining * (1.0 - 1e-12);
    if (last) dt = remaining;
    SimState next = step(state, forcing, dt, config.cfl_factor, config.dealias);
    if (last) next.t = config.t_end;
    if (!next.theta.is_finite()) {
      traj.completed = false;
      traj.failure = "non-finite values at t = " + std::to_string(next.t);
      break;
    }
    state = std::move(next);
    ++traj.steps;
    if (++since_output == config.output_stride || last) {
      since_output = 0;
      sample(state);
    }
  }
  traj.final_state = std::move(state);
  return traj;
}

inline void write_trajectory_csv(std::ostream& os, const std::vector<Sample>& samples) {
  os << "t,sup_theta,grad_sup,deficit,energy\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& s : samples) {
    line.str({});
    line << s.t << ',' << s.sup_theta << ',' << s.grad_sup << ',' << s.deficit << ',' << s.energy << '\n';
    os << line.str();
  }
}

/// θ̂(x, t̂) = θ(x/A, t̂/A): same samples on period A·d at time A·t, with the
/// forcing (1/A) f(x/A, t̂/A), i.e. amplitudes and frequencies divided by A.
inline std::pair<SimState, ForcingSpec> scale_to_hat(const SimState& state, double a, const ForcingSpec& spec) {
  if (!(a >= 1.0) || !std::isfinite(a)) throw InputError("scale_to_hat: require A >= 1");
  const auto& g = state.theta.geometry();
  const TorusGeometry scaled_geometry{g.n, a * g.d};
  SimState scaled{state.theta.reinterpreted(scaled_geometry), a * state.t};
  ForcingSpec scaled_spec = spec;
  scaled_spec.d = a * spec.d;
  for (auto& m : scaled_spec.modes) {
    m.amplitude /= a;
    m.sigma /= a;
  }
  return {std::move(scaled), std::move(scaled_spec)};
}

}  // namespace sqg
