#pragma once

// The two-branch modulus of continuity
//
//   ω(ζ) = ζ − ζ^{1+β}                          0 ≤ ζ ≤ δ
//   ω′(ζ) = γ / (ζ (4 + ln(ζ/δ)))               ζ > δ
//
// with the large-ζ branch integrated in closed form,
//   ω(ζ) = ω(δ) + γ ln((4 + ln(ζ/δ)) / 4),
// its rescaling ω_A(ζ) = ω(Aζ), and the velocity modulus
//   Ω(ζ) = B (∫_0^ζ ω(η)/η dη + ζ ∫_ζ^∞ ω(η)/η² dη).

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sqg/errors.hpp"
#include "sqg/quadrature.hpp"

namespace sqg {

/// Which one-sided derivative to return at the kink ζ = δ.
enum class Side { Left, Right };

struct ModulusParams {
  double delta = 0.1;
  double gamma = 0.05;
  double beta = 0.5;

  static double beta_from_alpha(double alpha) { return std::min(0.5, alpha); }

  /// Checks every construction constraint; throws InputError naming the first violated one.
  void validate() const {
    if (!(delta > 0.0 && delta <= 1.0)) throw InputError("modulus: require 0 < delta <= 1");
    if (!(gamma > 0.0)) throw InputError("modulus: require gamma > 0");
    if (!(gamma <= delta / 2.0)) throw InputError("modulus: require 0 < gamma <= delta/2");
    if (!(beta > 0.0 && beta <= 0.5)) throw InputError("modulus: require 0 < beta <= 1/2");
    if (!(std::pow(delta, 1.0 + beta) <= delta / 2.0))
      throw InputError("modulus: require delta^(1+beta) <= delta/2");
    if (!(gamma / (4.0 * delta) <= 1.0 - (1.0 + beta) * std::pow(delta, beta)))
      throw InputError("modulus: kink not concave, require gamma/(4 delta) <= 1 - (1+beta) delta^beta");
  }

  bool operator==(const ModulusParams&) const = default;
};

class KnvModulus {
 public:
  explicit KnvModulus(const ModulusParams& p) : params_(p) {
    params_.validate();
    omega_delta_ = p.delta - std::pow(p.delta, 1.0 + p.beta);
  }

  const ModulusParams& params() const { return params_; }
  double delta() const { return params_.delta; }
  double gamma() const { return params_.gamma; }
  double beta() const { return params_.beta; }
  double omega_at_kink() const { return omega_delta_; }

  double value(double zeta) const {
    if (!(zeta >= 0.0)) throw InputError("omega: zeta must be >= 0");
    if (zeta <= params_.delta) return zeta - std::pow(zeta, 1.0 + params_.beta);
    return omega_delta_ + params_.gamma * std::log1p(std::log(zeta / params_.delta) / 4.0);
  }
  double operator()(double zeta) const { return value(zeta); }

  double derivative(double zeta, Side side = Side::Right) const {
    if (!(zeta >= 0.0)) throw InputError("omega_prime: zeta must be >= 0");
    if (zeta < params_.delta || (zeta == params_.delta && side == Side::Left))
      return 1.0 - (1.0 + params_.beta) * std::pow(zeta, params_.beta);
    return params_.gamma / (zeta * (4.0 + std::log(zeta / params_.delta)));
  }

  /// ω″; −∞ at ζ = 0.
  double second_derivative(double zeta, Side side = Side::Right) const {
    if (!(zeta >= 0.0)) throw InputError("omega_second: zeta must be >= 0");
    if (zeta == 0.0) return -std::numeric_limits<double>::infinity();
    const double b = params_.beta;
    if (zeta < params_.delta || (zeta == params_.delta && side == Side::Left))
      return -b * (1.0 + b) * std::pow(zeta, b - 1.0);
    const double l = 4.0 + std::log(zeta / params_.delta);
    return -params_.gamma * (l + 1.0) / (zeta * zeta * l * l);
  }

  /// ω(hi) − ω(lo) without cancellation when the arguments are close.
  double difference(double lo, double hi) const {
    if (hi < lo) return -difference(hi, lo);
    const double d = params_.delta;
    if (hi <= d) {
      if (lo == 0.0) return value(hi);
      const double p = 1.0 + params_.beta;
      const double rel = (hi - lo) / lo;
      return (hi - lo) - std::pow(lo, p) * std::expm1(p * std::log1p(rel));
    }
    if (lo >= d) {
      const double l = 4.0 + std::log(lo / d);
      return params_.gamma * std::log1p(std::log1p((hi - lo) / lo) / l);
    }
    return difference(lo, d) + difference(d, hi);
  }

 private:
  ModulusParams params_;
  double omega_delta_ = 0.0;
};

inline double omega(const KnvModulus& m, double zeta) { return m.value(zeta); }
inline double omega_prime(const KnvModulus& m, double zeta, Side side = Side::Right) {
  return m.derivative(zeta, side);
}
inline double omega_second(const KnvModulus& m, double zeta, Side side = Side::Right) {
  return m.second_derivative(zeta, side);
}

/// ω_A(ζ) = ω(Aζ), A ≥ 1.
class ScaledModulus {
 public:
  ScaledModulus(KnvModulus base, double a) : base_(std::move(base)), a_(a) {
    if (!(a >= 1.0) || !std::isfinite(a)) throw InputError("scaled modulus: require finite A >= 1");
  }
  const KnvModulus& base() const { return base_; }
  double a() const { return a_; }
  double operator()(double zeta) const { return base_.value(a_ * zeta); }
  /// A·ω′(0) = A: the gradient bound implied by preserving ω_A.
  double gradient_bound() const { return a_ * base_.derivative(0.0); }

 private:
  KnvModulus base_;
  double a_;
};

inline double omega_a(const ScaledModulus& s, double zeta) { return s(zeta); }

/// The two integrals of Ω/B: inner = ∫_0^ζ ω/η, outer = ∫_ζ^∞ ω/η².
struct VelocityIntegrals {
  QuadratureResult inner;
  QuadratureResult outer;
};

/// Ω(ζ) = B (∫_0^ζ ω(η)/η dη + ζ ∫_ζ^∞ ω(η)/η² dη).
class VelocityModulus {
 public:
  VelocityModulus(KnvModulus base, double b, double rel_tol = 1e-8)
      : base_(std::move(base)), b_(b), rel_tol_(rel_tol) {
    if (!(b > 0.0) || !std::isfinite(b)) throw InputError("velocity modulus: require finite B > 0");
    if (!(rel_tol > 0.0)) throw InputError("velocity modulus: tolerance must be positive");
  }

  const KnvModulus& base() const { return base_; }
  double b() const { return b_; }
  double tolerance() const { return rel_tol_; }

  VelocityIntegrals integrals(double zeta) const {
    if (!(zeta > 0.0) || !std::isfinite(zeta)) throw InputError("capital_omega: zeta must be > 0");
    const double delta = base_.delta();
    const double beta = base_.beta();
    const QuadratureOptions opt{rel_tol_ * 1e-2, 1e-300, 4000};
    VelocityIntegrals out;

    // ∫_0^{min(ζ,δ)} (1 − η^β) dη in closed form; the rest by quadrature.
    const double z = std::min(zeta, delta);
    out.inner.value = z - std::pow(z, 1.0 + beta) / (1.0 + beta);
    if (zeta > delta) {
      const auto breaks = geometric_breaks(delta, zeta);
      out.inner += integrate([this](double eta) { return base_.value(eta) / eta; }, breaks, opt);
    }

    // ∫_ζ^∞ ω/η² = ∫_ζ^H ω/η² + ω(H)/H + ∫_H^∞ ω′/η, with H = max(ζ, δ).
    const double h = std::max(zeta, delta);
    if (zeta < delta) {
      const auto breaks = geometric_breaks(zeta, h);
      out.outer += integrate([this](double eta) { return base_.value(eta) / (eta * eta); }, breaks, opt);
    }
    out.outer.value += base_.value(h) / h;
    out.outer += tail(h, opt);
    return out;
  }

  QuadratureResult evaluate(double zeta) const {
    const auto parts = integrals(zeta);
    QuadratureResult r;
    r.value = b_ * (parts.inner.value + zeta * parts.outer.value);
    r.error = b_ * (parts.inner.error + zeta * parts.outer.error);
    r.converged = parts.inner.converged && parts.outer.converged;
    r.evaluations = parts.inner.evaluations + parts.outer.evaluations;
    return r;
  }

  double operator()(double zeta) const { return evaluate(zeta).value; }

  /// T(H) = ∫_H^∞ ω′(η)/η dη for H ≥ δ. Panels [H 2^j, H 2^{j+1}] are added
  /// until the majorant γ/(H_end (4 + ln(H_end/δ))) of the remainder drops
  /// below the tolerance relative to the accumulated value plus ω(H)/H.
  QuadratureResult tail(double h, const QuadratureOptions& opt) const {
    const double delta = base_.delta();
    const double gamma = base_.gamma();
    const auto integrand = [this](double eta) { return base_.derivative(eta) / eta; };
    QuadratureResult acc;
    const double floor_scale = base_.value(h) / h;
    double lo = h;
    for (int guard = 0; guard < 400; ++guard) {
      const double hi = lo * 16.0;
      acc += integrate(integrand, geometric_breaks(lo, hi), opt);
      lo = hi;
      const double majorant = gamma / (lo * (4.0 + std::log(lo / delta)));
      if (majorant < opt.rel_tol * (acc.value + floor_scale)) {
        acc.error += majorant;
        return acc;
      }
    }
    acc.converged = false;
    return acc;
  }

 private:
  KnvModulus base_;
  double b_;
  double rel_tol_;
};

inline double capital_omega(const VelocityModulus& v, double zeta) { return v(zeta); }

/// Outcome of the standing-assumption checks on ω.
struct ValidityCheck {
  std::string name;
  bool pass = true;
  std::optional<double> witness;  // ζ at which the check failed
  std::string detail;
};

struct ValidityReport {
  ModulusParams params;
  std::vector<ValidityCheck> checks;

  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

/// Samples ω on a log grid of 10⁴ points in [1e-10, 1e6].
inline ValidityReport validate(const KnvModulus& m) {
  ValidityReport rep{m.params(), {}};
  const auto grid = log_grid(1e-10, 1e6, 10000);
  const double delta = m.delta();

  const auto fail_at = [](ValidityCheck& c, double z, std::string why) {
    if (c.pass) {
      c.pass = false;
      c.witness = z;
      c.detail = std::move(why);
    }
  };

  ValidityCheck inc{"increasing", true, {}, {}};
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(m(grid[i + 1]) > m(grid[i]))) fail_at(inc, grid[i], "omega not strictly increasing");
  rep.checks.push_back(inc);

  ValidityCheck conc{"concave", true, {}, {}};
  if (!(m.derivative(delta, Side::Right) <= m.derivative(delta, Side::Left)))
    fail_at(conc, delta, "right derivative exceeds left derivative at the kink");
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double a = grid[i], b = grid[i + 1];
    const double da = m.derivative(a, Side::Right);
    const double db = m.derivative(b, b == delta ? Side::Left : Side::Right);
    if (!(db <= da)) fail_at(conc, a, "omega' increases");
  }
  rep.checks.push_back(conc);

  ValidityCheck zero{"omega_zero", m(0.0) == 0.0, {}, {}};
  if (!zero.pass) {
    zero.witness = 0.0;
    zero.detail = "omega(0) != 0";
  }
  rep.checks.push_back(zero);

  ValidityCheck slope{"slope_at_zero", m.derivative(0.0) == 1.0, {}, {}};
  if (!slope.pass) {
    slope.witness = 0.0;
    slope.detail = "omega'(0) != 1";
  }
  rep.checks.push_back(slope);

  // Along ζ_k = δ e^{4(2^k − 1)} the factor (4 + ln(ζ/δ)) doubles, so each
  // step adds γ ln 2: the increments do not decay and ω is unbounded.
  ValidityCheck growth{"unbounded", true, {}, {}};
  if (!(m(1e6 * delta) > m(delta))) fail_at(growth, 1e6 * delta, "omega(1e6 delta) <= omega(delta)");
  for (int k = 0; k < 5; ++k) {
    const double z0 = delta * std::exp(4.0 * (std::ldexp(1.0, k) - 1.0));
    const double z1 = delta * std::exp(4.0 * (std::ldexp(1.0, k + 1) - 1.0));
    if (!(m(z1) - m(z0) >= 0.99 * m.gamma() * std::log(2.0))) fail_at(growth, z1, "log-log increments decay");
  }
  rep.checks.push_back(growth);

  ValidityCheck curv{"second_derivative_negative", true, {}, {}};
  for (double z : grid) {
    const bool ok = z == delta ? (m.second_derivative(z, Side::Left) < 0.0 && m.second_derivative(z, Side::Right) < 0.0)
                               : m.second_derivative(z) < 0.0;
    if (!ok) fail_at(curv, z, "omega'' >= 0");
  }
  rep.checks.push_back(curv);

  ValidityCheck blow{"second_derivative_diverges_at_zero", true, {}, {}};
  if (!(std::abs(m.second_derivative(1e-10)) > 1e3)) fail_at(blow, 1e-10, "|omega''(1e-10)| <= 1e3");
  if (!(m.second_derivative(0.0) == -std::numeric_limits<double>::infinity()))
    fail_at(blow, 0.0, "omega''(0) is not -infinity");
  rep.checks.push_back(blow);

  return rep;
}

}  // namespace sqg
