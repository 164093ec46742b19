#pragma once

// Numerical certification of the breakthrough estimate for the scaled field:
//
//   ∂t(θ̂(x) − θ̂(y)) ≤ Ω(ζ)ω′(ζ) + D(ζ) + F(ζ)  <  0,    0 < ζ ≤ A·D,
//
// where D(ζ) is the dissipative bound (two concavity integrals) and F the
// forcing bound, checked on log grids in the small (ζ ≤ δ) and large
// (δ ≤ ζ ≤ A·D) regimes, together with the auxiliary inequalities of the
// argument, the doubling search for A and an empirical estimate of B.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "sqg/dynamics.hpp"
#include "sqg/errors.hpp"
#include "sqg/modulus.hpp"
#include "sqg/monitor.hpp"
#include "sqg/quadrature.hpp"
#include "sqg/torus_spectral.hpp"

namespace sqg {

/// C₁, α, ‖f‖_∞, the period D and the velocity-modulus constant B.
struct ProblemConstants {
  double c1 = 0.0;
  double alpha = 1.0;
  double f_sup = 0.0;
  double d_period = 2.0 * std::numbers::pi;
  double b = 1.0;

  void validate() const {
    if (!(c1 >= 0.0) || !std::isfinite(c1)) throw InputError("constants: require C1 >= 0");
    if (!(alpha > 0.0)) throw InputError("constants: require alpha > 0");
    if (!(f_sup >= 0.0) || !std::isfinite(f_sup)) throw InputError("constants: require ||f|| >= 0");
    if (!(d_period > 0.0)) throw InputError("constants: require D > 0");
    if (!(b > 0.0) || !std::isfinite(b)) throw InputError("constants: require B > 0");
  }

  static ProblemConstants from_forcing(const ForcingSpec& spec, double b) {
    const auto hc = holder_constants(spec);
    ProblemConstants pc{hc.c1, hc.alpha, spec.sup_bound(), spec.d, b};
    pc.validate();
    return pc;
  }
};

// ---------------------------------------------------------------------------
// The three bounds

/// Ω(ζ)·ω′(ζ), with the right-hand derivative at the kink.
inline QuadratureResult advection_bound(const KnvModulus& m, const VelocityModulus& v, double zeta) {
  auto r = v.evaluate(zeta);
  const double slope = m.derivative(zeta, Side::Right);
  r.value *= slope;
  r.error *= slope;
  return r;
}

namespace detail {

// (1+x)^p + (1−x)^p − 2 for 0 ≤ x ≤ 1.
inline double symmetric_power_difference(double x, double p) {
  if (x > 0.5) return std::pow(1.0 + x, p) + std::pow(1.0 - x, p) - 2.0;
  // 2 Σ_{k≥1} C(p, 2k) x^{2k}
  const double x2 = x * x;
  double coeff = 1.0, pow_x = 1.0, sum = 0.0;
  for (int k = 1; k < 200; ++k) {
    coeff *= (p - (2 * k - 2)) * (p - (2 * k - 1)) / static_cast<double>((2 * k - 1) * (2 * k));
    pow_x *= x2;
    const double term = coeff * pow_x;
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
  }
  return 2.0 * sum;
}

}  // namespace detail

/// ω(ζ + 2η) + ω(ζ − 2η) − 2ω(ζ) for 0 ≤ 2η ≤ ζ, without cancellation when η ≪ ζ.
inline double second_difference(const KnvModulus& m, double zeta, double eta) {
  const double delta = m.delta();
  const double hi = zeta + 2.0 * eta;
  const double lo = zeta - 2.0 * eta;
  const double x = 2.0 * eta / zeta;
  if (hi <= delta) return -std::pow(zeta, 1.0 + m.beta()) * detail::symmetric_power_difference(x, 1.0 + m.beta());
  if (lo >= delta) {
    // γ[ln(1 + u/L) + ln(1 + v/L)], u = ln(1+x), v = ln(1−x), L = 4 + ln(ζ/δ)
    const double l = 4.0 + std::log(zeta / delta);
    const double u = std::log1p(x);
    const double v = std::log1p(-x);
    return m.gamma() * std::log1p(std::log1p(-x * x) / l + u * v / (l * l));
  }
  return m.difference(zeta, hi) - m.difference(lo, zeta);
}

/// (1/π)[∫_0^{ζ/2} (ω(ζ+2η)+ω(ζ−2η)−2ω(ζ))/η² dη + ∫_{ζ/2}^∞ (ω(2η+ζ)−ω(2η−ζ)−2ω(ζ))/η² dη].
///
/// Panels are split wherever an argument crosses δ. The second integral is
/// Q − 4ω(ζ)/ζ with Q = ∫ (ω(2η+ζ)−ω(2η−ζ))/η², whose tail beyond H lies in
/// [0, R(H)], R(H) = ∫_H^∞ 2ζω′(2η−ζ)/η²; R(H) is added, so the result is an
/// upper estimate. At ζ = δ the first integral diverges to −∞ (ω′ jumps down).
inline QuadratureResult dissipation_bound(const KnvModulus& m, double zeta, double rel_tol = 1e-10) {
  if (!(zeta > 0.0) || !std::isfinite(zeta)) throw InputError("dissipation_bound: zeta must be > 0");
  const double delta = m.delta();
  QuadratureResult out;
  if (zeta == delta) {
    out.value = -std::numeric_limits<double>::infinity();
    return out;
  }
  const QuadratureOptions opt{rel_tol, 1e-300, 20000};

  // First integral on [0, ζ/2].
  {
    std::vector<double> breaks{0.0, 0.5 * zeta};
    const double kink = 0.5 * std::abs(delta - zeta);
    if (kink > 0.0 && kink < 0.5 * zeta) breaks.insert(breaks.begin() + 1, kink);
    // Geometric refinement towards the kink, where the integrand varies on the scale of |ζ − δ|.
    std::vector<double> refined;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      refined.push_back(breaks[i]);
      const double a = breaks[i], b = breaks[i + 1];
      if (b == kink && a == 0.0 && kink < 0.25 * zeta) {
        for (double s = 0.5; kink * (1.0 - s) > a && s > 1e-12; s *= 0.5) refined.push_back(kink * (1.0 - s));
      }
      if (a == kink && b - a > 2.0 * kink) {
        for (double s = 2.0 * kink; a + s < b; s *= 2.0) refined.push_back(a + s);
      }
    }
    refined.push_back(breaks.back());
    std::sort(refined.begin(), refined.end());
    refined.erase(std::unique(refined.begin(), refined.end()), refined.end());
    const auto f1 = [&](double eta) { return second_difference(m, zeta, eta) / (eta * eta); };
    out += integrate(f1, refined, opt);
  }

  // Second integral: Q on [ζ/2, ∞) minus 4ω(ζ)/ζ.
  {
    const double start = 0.5 * zeta;
    std::vector<double> extra;
    const double k1 = 0.5 * (delta - zeta);
    const double k2 = 0.5 * (delta + zeta);
    if (k1 > start) extra.push_back(k1);
    extra.push_back(k2);
    const auto f2 = [&](double eta) { return m.difference(2.0 * eta - zeta, 2.0 * eta + zeta) / (eta * eta); };
    const double target = 4.0 * m.value(zeta) / zeta;
    double lo = start;
    double hi = std::max(4.0 * zeta, 2.0 * k2);
    QuadratureResult q;
    bool done = false;
    for (int guard = 0; guard < 200 && !done; ++guard) {
      q += integrate(f2, geometric_breaks(lo, hi, 2.0, extra), opt);
      lo = hi;
      hi *= 16.0;
      const double x = 2.0 * lo - zeta;  // ≥ δ here
      const double slope = x > delta ? m.gamma() / (x * (4.0 + std::log(x / delta))) : 1.0;
      const double remainder = 2.0 * zeta * slope / lo;
      if (remainder < 1e-3 * rel_tol * target) {
        q.value += remainder;
        q.error += remainder;
        done = true;
      }
    }
    q.converged = q.converged && done;
    q.value -= target;
    out += q;
  }
  out.value /= std::numbers::pi;
  out.error /= std::numbers::pi;
  return out;
}

enum class ForcingRegime { Small, Large };

/// C₁ζ^α/A^{1+α} (small ζ) or 2‖f‖_∞/A (large ζ).
inline double forcing_bound(const ProblemConstants& pc, double zeta, double a, ForcingRegime regime) {
  if (!(zeta > 0.0)) throw InputError("forcing_bound: zeta must be > 0");
  if (!(a >= 1.0)) throw InputError("forcing_bound: require A >= 1");
  if (regime == ForcingRegime::Small) return pc.c1 * std::pow(zeta, pc.alpha) / std::pow(a, 1.0 + pc.alpha);
  return 2.0 * pc.f_sup / a;
}

// ---------------------------------------------------------------------------
// Regime certificates

/// Terms of the time-derivative estimate at one ζ.
struct EstimateTerms {
  double zeta = 0.0;
  double advection = 0.0;
  double dissipation = 0.0;
  double forcing = 0.0;
  double total = 0.0;  // sharp sum
  double coarse = 0.0;  // closed-form chain bound
  bool quadrature_ok = true;
};

struct BoundCheck {
  bool pass = true;
  double worst_margin = -std::numeric_limits<double>::infinity();  // max over grid of the bound
  std::optional<double> witness_zeta;
};

struct RegimeResult {
  std::string regime;
  bool pass = false;
  bool inconclusive = false;
  double worst_margin = -std::numeric_limits<double>::infinity();
  std::optional<double> witness_zeta;
  std::optional<EstimateTerms> witness_terms;  // evaluated sides at the witness
  BoundCheck coarse;
  BoundCheck sharp;
  std::optional<bool> endpoint_condition;  // large regime only
  double zeta_lo = 0.0;
  double zeta_hi = 0.0;
  std::size_t grid_points = 0;
  std::string diagnosis;
};

inline constexpr std::size_t kRegimeGridPoints = 512;
inline constexpr double kSmallZetaFloor = 1e-10;
// "Strictly negative" means ≤ −kSignMargin × (largest term in magnitude).
inline constexpr double kSignMargin = 1e-12;

namespace detail {

inline bool strictly_negative(double value, double scale) { return value <= -kSignMargin * scale; }

inline void fold(BoundCheck& check, double value, double scale, double zeta) {
  if (value > check.worst_margin || !check.witness_zeta) {
    if (value > check.worst_margin) check.worst_margin = value;
    if (!check.witness_zeta || value >= check.worst_margin) check.witness_zeta = zeta;
  }
  if (!strictly_negative(value, scale)) check.pass = false;
}

inline void finish(RegimeResult& r, const std::vector<EstimateTerms>& terms) {
  r.pass = r.coarse.pass && r.sharp.pass && !r.inconclusive;
  // Report whichever bound comes closest to failing.
  const bool use_coarse = r.coarse.worst_margin >= r.sharp.worst_margin;
  const auto& primary = use_coarse ? r.coarse : r.sharp;
  r.worst_margin = primary.worst_margin;
  r.witness_zeta = primary.witness_zeta;
  if (r.witness_zeta)
    for (const auto& t : terms)
      if (t.zeta == *r.witness_zeta) r.witness_terms = t;
}

}  // namespace detail

/// A-independent sharp terms (advection and dissipation) on a ζ grid.
struct SharpTerms {
  std::vector<double> zeta;
  std::vector<double> advection;
  std::vector<double> dissipation;
  std::vector<bool> ok;
};

inline SharpTerms sharp_terms(const KnvModulus& m, const VelocityModulus& v, const std::vector<double>& grid) {
  SharpTerms st;
  st.zeta = grid;
  st.advection.resize(grid.size());
  st.dissipation.resize(grid.size());
  st.ok.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto adv = advection_bound(m, v, grid[i]);
    const auto dis = dissipation_bound(m, grid[i]);
    st.advection[i] = adv.value;
    st.dissipation[i] = dis.value;
    st.ok[i] = adv.converged && dis.converged;
  }
  return st;
}

inline std::vector<double> small_zeta_grid(const KnvModulus& m) {
  return log_grid(kSmallZetaFloor, m.delta(), kRegimeGridPoints);
}

/// Small regime 0 < ζ ≤ δ. Coarse bound
///   B(3ζ + ζ ln(δ/ζ)) − (β(1+β)/π) ζ^β + (C₁/A^{1+β}) ζ^β
/// and sharp sum Ω ω′ + D + C₁ζ^α/A^{1+α}; passes iff both are strictly negative
/// on every grid point.
inline RegimeResult certify_small_zeta(const KnvModulus& m, const ProblemConstants& pc, double a,
                                       const SharpTerms* precomputed = nullptr) {
  pc.validate();
  if (!(a >= 1.0)) throw InputError("certify_small_zeta: require A >= 1");
  const double delta = m.delta(), beta = m.beta(), b = pc.b;
  RegimeResult r;
  r.regime = "small_zeta";
  r.zeta_lo = kSmallZetaFloor;
  r.zeta_hi = delta;
  SharpTerms local;
  if (!precomputed) {
    local = sharp_terms(m, VelocityModulus(m, b), small_zeta_grid(m));
    precomputed = &local;
  }
  const auto& st = *precomputed;
  r.grid_points = st.zeta.size();
  std::vector<EstimateTerms> terms;
  terms.reserve(st.zeta.size());
  const double dissipation_coeff = beta * (1.0 + beta) / std::numbers::pi;
  const double forcing_coeff = pc.c1 / std::pow(a, 1.0 + beta);
  for (std::size_t i = 0; i < st.zeta.size(); ++i) {
    const double z = st.zeta[i];
    EstimateTerms t;
    t.zeta = z;
    t.advection = st.advection[i];
    t.dissipation = st.dissipation[i];
    t.forcing = forcing_bound(pc, z, a, ForcingRegime::Small);
    t.total = t.advection + t.dissipation + t.forcing;
    t.quadrature_ok = st.ok[i];
    const double adv_coarse = b * (3.0 * z + z * std::log(delta / z));
    const double zb = std::pow(z, beta);
    t.coarse = adv_coarse - dissipation_coeff * zb + forcing_coeff * zb;
    terms.push_back(t);
    if (!t.quadrature_ok) r.inconclusive = true;
    detail::fold(r.coarse, t.coarse, std::max({adv_coarse, dissipation_coeff * zb, forcing_coeff * zb}), z);
    const double scale = std::max({std::abs(t.advection), std::abs(t.dissipation), std::abs(t.forcing)});
    detail::fold(r.sharp, t.total, std::isfinite(scale) ? scale : 1.0, z);
  }
  detail::finish(r, terms);
  if (r.inconclusive) r.diagnosis = "quadrature did not converge at some grid points";
  else if (!r.pass) r.diagnosis = "small-zeta estimate not negative; reduce delta or B, or increase A";
  return r;
}

inline std::vector<double> large_zeta_grid(const KnvModulus& m, double zeta_hi) {
  return log_grid(m.delta(), zeta_hi, kRegimeGridPoints);
}

/// Large regime δ ≤ ζ ≤ A·D. Coarse bound (ω(ζ)/ζ)(Bγ − 1/π) + 2‖f‖_∞/A and the
/// sharp sum Ω ω′ + D + 2‖f‖_∞/A, plus the endpoint sufficient condition at ζ = A·D.
inline RegimeResult certify_large_zeta(const KnvModulus& m, const ProblemConstants& pc, double a) {
  pc.validate();
  if (!(a >= 1.0)) throw InputError("certify_large_zeta: require A >= 1");
  const double delta = m.delta(), gamma = m.gamma(), b = pc.b;
  const double zeta_hi = a * pc.d_period;
  RegimeResult r;
  r.regime = "large_zeta";
  r.zeta_lo = delta;
  r.zeta_hi = zeta_hi;
  const double coeff = b * gamma - 1.0 / std::numbers::pi;
  const double force = 2.0 * pc.f_sup / a;
  if (coeff >= 0.0) {
    r.pass = false;
    r.coarse.pass = false;
    r.coarse.worst_margin = coeff * m.value(delta) / delta + force;
    r.coarse.witness_zeta = delta;
    r.worst_margin = r.coarse.worst_margin;
    r.witness_zeta = delta;
    EstimateTerms t;
    t.zeta = delta;
    t.coarse = r.worst_margin;
    t.forcing = force;
    r.witness_terms = t;
    r.endpoint_condition = false;
    r.diagnosis = "B*gamma >= 1/pi: large-zeta estimate cannot be negative for any A";
    return r;
  }
  if (zeta_hi <= delta) {
    r.pass = true;
    r.diagnosis = "A*D <= delta: range covered by the small regime";
    return r;
  }
  const double end_ratio = m.value(zeta_hi) / zeta_hi;
  r.endpoint_condition = detail::strictly_negative(end_ratio * coeff + force, std::max(std::abs(end_ratio * coeff), force));

  const VelocityModulus v(m, b);
  const auto grid = large_zeta_grid(m, zeta_hi);
  const auto st = sharp_terms(m, v, grid);
  r.grid_points = grid.size();
  std::vector<EstimateTerms> terms;
  terms.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double z = grid[i];
    EstimateTerms t;
    t.zeta = z;
    t.advection = st.advection[i];
    t.dissipation = st.dissipation[i];
    t.forcing = force;
    t.total = t.advection + t.dissipation + force;
    t.quadrature_ok = st.ok[i];
    const double ratio = m.value(z) / z;
    t.coarse = ratio * coeff + force;
    terms.push_back(t);
    if (!t.quadrature_ok) r.inconclusive = true;
    detail::fold(r.coarse, t.coarse, std::max(std::abs(ratio * coeff), force), z);
    const double scale = std::max({std::abs(t.advection), std::abs(t.dissipation), force});
    detail::fold(r.sharp, t.total, std::isfinite(scale) ? scale : 1.0, z);
  }
  detail::finish(r, terms);
  if (r.inconclusive) r.diagnosis = "quadrature did not converge at some grid points";
  else if (!r.pass) r.diagnosis = "large-zeta estimate not negative; increase A or reduce ||f||";
  return r;
}

// ---------------------------------------------------------------------------
// Auxiliary inequalities

struct ChainCheck {
  std::string name;
  bool pass = true;
  double worst_margin = -std::numeric_limits<double>::infinity();  // max(lhs − rhs)
  std::optional<double> witness_zeta;
  double zeta_lo = 0.0;
  double zeta_hi = 0.0;
};

struct ChainReport {
  std::vector<ChainCheck> checks;
  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  }
};

inline constexpr double kChainUpper = 1e6;

/// The intermediate inequalities of the estimate, each on a 512-point log grid:
///  1. ∫_0^ζ ω/η ≤ ζ                                   (0, δ]
///  2. ∫_ζ^∞ ω/η² ≤ 2 + ln(δ/ζ)                          (0, δ]
///  3. ω(2ζ) ≤ (3/2) ω(ζ)                                [δ, 10⁶]
///  4. δ/2 ≤ ω(δ) ≤ ω(ζ)                                 [δ, 10⁶]
///  5. ∫_ζ^∞ ω/η² ≤ 2ω(ζ)/ζ                              [δ, 10⁶]
///  6. ∫_0^ζ ω/η + ζ∫_ζ^∞ ω/η² ≤ ω(ζ)(4 + ln(ζ/δ))       [δ, 10⁶]
inline ChainReport verify_auxiliary_chain(const KnvModulus& m) {
  const double delta = m.delta();
  const VelocityModulus v(m, 1.0, 1e-10);
  const auto small = log_grid(kSmallZetaFloor, delta, kRegimeGridPoints);
  const auto large = log_grid(delta, std::max(kChainUpper, 2.0 * delta), kRegimeGridPoints);

  const auto check = [](std::string name, const std::vector<double>& grid, auto&& lhs_minus_rhs, auto&& scale) {
    ChainCheck c;
    c.name = std::move(name);
    c.zeta_lo = grid.front();
    c.zeta_hi = grid.back();
    for (double z : grid) {
      const double diff = lhs_minus_rhs(z);
      if (diff > c.worst_margin || !c.witness_zeta) {
        c.worst_margin = std::max(c.worst_margin, diff);
        c.witness_zeta = z;
      }
      if (diff > kSignMargin * scale(z)) c.pass = false;
    }
    return c;
  };

  ChainReport rep;
  std::vector<VelocityIntegrals> small_int, large_int;
  for (double z : small) small_int.push_back(v.integrals(z));
  for (double z : large) large_int.push_back(v.integrals(z));
  const auto index_of = [](const std::vector<double>& g, double z) {
    return static_cast<std::size_t>(std::lower_bound(g.begin(), g.end(), z) - g.begin());
  };

  rep.checks.push_back(check(
      "inner_integral_le_zeta", small, [&](double z) { return small_int[index_of(small, z)].inner.value - z; },
      [](double z) { return z; }));
  rep.checks.push_back(check(
      "outer_integral_le_two_plus_log", small,
      [&](double z) { return small_int[index_of(small, z)].outer.value - (2.0 + std::log(delta / z)); },
      [&](double z) { return 2.0 + std::log(delta / z); }));
  rep.checks.push_back(check(
      "omega_doubling_le_three_halves", large, [&](double z) { return m(2.0 * z) - 1.5 * m(z); },
      [&](double z) { return m(z); }));
  rep.checks.push_back(check(
      "half_delta_le_omega_delta_le_omega", large,
      [&](double z) { return std::max(0.5 * delta - m.omega_at_kink(), m.omega_at_kink() - m(z)); },
      [&](double z) { return m(z); }));
  rep.checks.push_back(check(
      "outer_integral_le_twice_ratio", large,
      [&](double z) { return large_int[index_of(large, z)].outer.value - 2.0 * m(z) / z; },
      [&](double z) { return m(z) / z; }));
  rep.checks.push_back(check(
      "velocity_integrals_le_omega_log", large,
      [&](double z) {
        const auto& in = large_int[index_of(large, z)];
        return in.inner.value + z * in.outer.value - m(z) * (4.0 + std::log(z / delta));
      },
      [&](double z) { return m(z) * (4.0 + std::log(z / delta)); }));
  return rep;
}

// ---------------------------------------------------------------------------
// Doubling search for A

struct InitialDataCheck {
  bool pass = false;
  double worst_ratio = 0.0;  // max_h max_inc(h)/ω_A(|h|)
  std::optional<Offset> witness_offset;
  double witness_zeta = 0.0;
  double grad_sup = 0.0;
};

struct CertificationReport {
  ModulusParams params;
  ProblemConstants constants;
  std::optional<double> a;
  InitialDataCheck initial_data;
  RegimeResult small_zeta;
  RegimeResult large_zeta;
  ChainReport chain;
  std::string b_provenance;
  std::string diagnosis;
  std::size_t doublings = 0;

  bool pass() const {
    return a.has_value() && initial_data.pass && small_zeta.pass && large_zeta.pass && chain.all_pass();
  }
};

/// Offset budget and sweep mode used for the initial-data increment profile.
struct MonitorHandle {
  std::size_t offset_budget = 0;  // 0 → 8n
  bool full_sweep = false;
};

inline constexpr double kInitialDataMargin = 1e-3;
inline constexpr int kMaxDoublingExponent = 60;

/// θ₀ has ω_A as modulus on measured offsets with relative margin, and
/// ‖∇θ₀‖_∞ ≤ (1 − margin)·A.
inline InitialDataCheck check_initial_data(const IncrementProfile& prof, double grad_sup, const ScaledModulus& s) {
  InitialDataCheck c;
  c.grad_sup = grad_sup;
  c.pass = grad_sup <= (1.0 - kInitialDataMargin) * s.gradient_bound();
  for (const auto& e : prof.entries) {
    const double w = s(e.distance);
    const double ratio = e.max_inc / w;
    if (!c.witness_offset || ratio > c.worst_ratio) {
      c.worst_ratio = ratio;
      c.witness_offset = e.h;
      c.witness_zeta = e.distance;
    }
    if (e.max_inc > (1.0 - kInitialDataMargin) * w) c.pass = false;
  }
  return c;
}

/// Smallest power-of-two A ≤ 2⁶⁰ for which the initial data fits under ω_A and
/// both regime certificates pass. Returns a report with `a` unset and a
/// diagnosis when no such A exists.
inline CertificationReport choose_a(const ScalarField& theta0, const ProblemConstants& pc, const KnvModulus& m,
                                    const MonitorHandle& monitor = {}) {
  pc.validate();
  detail::require_finite(theta0, "choose_a");
  if (std::abs(theta0.geometry().d - pc.d_period) > 1e-12 * pc.d_period)
    throw StructuralError("choose_a: initial data period differs from D");

  CertificationReport rep;
  rep.params = m.params();
  rep.constants = pc;
  rep.chain = verify_auxiliary_chain(m);

  const std::size_t budget = monitor.offset_budget ? monitor.offset_budget : default_offset_budget(theta0.n());
  ProfileOptions popt;
  popt.full_sweep = monitor.full_sweep;
  const auto profile = increment_profile(theta0, budget, popt);
  const double grad0 = grad_sup_norm(theta0);

  const VelocityModulus v(m, pc.b);
  const auto small_terms = sharp_terms(m, v, small_zeta_grid(m));

  // A-independent obstructions end the search early.
  if (pc.b * m.gamma() >= 1.0 / std::numbers::pi) {
    rep.large_zeta = certify_large_zeta(m, pc, 1.0);
    rep.small_zeta = certify_small_zeta(m, pc, 1.0, &small_terms);
    rep.initial_data = check_initial_data(profile, grad0, ScaledModulus(m, 1.0));
    rep.diagnosis = "blocked by large-zeta regime: B*gamma >= 1/pi";
    return rep;
  }
  {
    ProblemConstants unforced = pc;
    unforced.c1 = 0.0;
    const auto limit = certify_small_zeta(m, unforced, 1.0, &small_terms);
    if (!limit.pass) {
      rep.small_zeta = certify_small_zeta(m, pc, 1.0, &small_terms);
      rep.large_zeta = certify_large_zeta(m, pc, 1.0);
      rep.initial_data = check_initial_data(profile, grad0, ScaledModulus(m, 1.0));
      rep.diagnosis = "blocked by small-zeta regime: estimate not negative even without forcing (reduce delta or B)";
      return rep;
    }
  }

  for (int k = 0; k <= kMaxDoublingExponent; ++k) {
    const double a = std::ldexp(1.0, k);
    rep.doublings = static_cast<std::size_t>(k);
    rep.initial_data = check_initial_data(profile, grad0, ScaledModulus(m, a));
    if (!rep.initial_data.pass && k < kMaxDoublingExponent) continue;
    rep.small_zeta = certify_small_zeta(m, pc, a, &small_terms);
    if (!rep.small_zeta.pass && k < kMaxDoublingExponent) continue;
    rep.large_zeta = certify_large_zeta(m, pc, a);
    if (rep.initial_data.pass && rep.small_zeta.pass && rep.large_zeta.pass) {
      rep.a = a;
      rep.diagnosis = rep.chain.all_pass() ? "certified" : "certified regimes, but an auxiliary inequality failed";
      return rep;
    }
  }
  std::string blockers;
  if (!rep.initial_data.pass) blockers += " initial-data";
  if (!rep.small_zeta.pass) blockers += " small-zeta";
  if (!rep.large_zeta.pass) blockers += " large-zeta";
  rep.diagnosis = "no A <= 2^60 passes; blocking:" + blockers;
  return rep;
}

/// Certificate at a fixed, user-supplied A.
inline CertificationReport certify_at(const ScalarField& theta0, const ProblemConstants& pc, const KnvModulus& m,
                                      double a, const MonitorHandle& monitor = {}) {
  pc.validate();
  CertificationReport rep;
  rep.params = m.params();
  rep.constants = pc;
  rep.chain = verify_auxiliary_chain(m);
  const std::size_t budget = monitor.offset_budget ? monitor.offset_budget : default_offset_budget(theta0.n());
  ProfileOptions popt;
  popt.full_sweep = monitor.full_sweep;
  rep.initial_data = check_initial_data(increment_profile(theta0, budget, popt), grad_sup_norm(theta0), ScaledModulus(m, a));
  rep.small_zeta = certify_small_zeta(m, pc, a);
  rep.large_zeta = certify_large_zeta(m, pc, a);
  rep.a = a;
  rep.diagnosis = rep.pass() ? "certified" : "not certified at the given A";
  return rep;
}

// ---------------------------------------------------------------------------
// Empirical B

/// Piecewise-linear concave nondecreasing modulus through (0, 0).
class EmpiricalModulus {
 public:
  /// Least concave nondecreasing majorant of the points (distance, increment).
  static EmpiricalModulus majorant(std::vector<std::pair<double, double>> pts) {
    std::sort(pts.begin(), pts.end());
    std::vector<std::pair<double, double>> hull{{0.0, 0.0}};
    for (const auto& p : pts) {
      if (p.first <= 0.0) continue;
      while (hull.size() >= 2) {
        const auto& o = hull[hull.size() - 2];
        const auto& q = hull.back();
        const double cross = (q.first - o.first) * (p.second - o.second) - (q.second - o.second) * (p.first - o.first);
        if (cross >= 0.0) hull.pop_back();  // q lies on or below segment o→p
        else break;
      }
      hull.push_back(p);
    }
    // Cut after the maximum: the nondecreasing majorant is flat beyond it.
    std::size_t top = 0;
    for (std::size_t i = 0; i < hull.size(); ++i)
      if (hull[i].second > hull[top].second) top = i;
    hull.resize(top + 1);
    EmpiricalModulus e;
    e.vertices_ = std::move(hull);
    return e;
  }

  const std::vector<std::pair<double, double>>& vertices() const { return vertices_; }
  bool degenerate() const { return vertices_.size() < 2 || vertices_.back().second <= 0.0; }

  double value(double z) const {
    for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
      const auto [x0, y0] = vertices_[i];
      const auto [x1, y1] = vertices_[i + 1];
      if (z <= x1) return y0 + (y1 - y0) * (z - x0) / (x1 - x0);
    }
    return vertices_.back().second;
  }

  /// ∫_0^ζ ω/η + ζ ∫_ζ^∞ ω/η², integrated exactly segment by segment.
  double velocity_functional(double zeta) const {
    double inner = 0.0, outer = 0.0;
    for (std::size_t i = 0; i + 1 < vertices_.size(); ++i) {
      const auto [x0, y0] = vertices_[i];
      const auto [x1, y1] = vertices_[i + 1];
      const double s = (y1 - y0) / (x1 - x0);
      const double c = y0 - s * x0;  // ω(η) = c + sη on this segment
      const auto in_part = [&](double lo, double hi) {
        return (lo > 0.0 ? c * std::log(hi / lo) : 0.0) + s * (hi - lo);
      };
      const auto out_part = [&](double lo, double hi) { return c * (1.0 / lo - 1.0 / hi) + s * std::log(hi / lo); };
      if (zeta > x0) inner += in_part(x0, std::min(zeta, x1));
      if (zeta < x1) outer += out_part(std::max(zeta, x0), x1);
    }
    const double xm = vertices_.back().first, ym = vertices_.back().second;
    if (zeta > xm) inner += ym * std::log(zeta / xm);
    outer += ym / std::max(zeta, xm);
    return inner + zeta * outer;
  }

 private:
  std::vector<std::pair<double, double>> vertices_;
};

/// max_x |θ(x+h) − θ(x)|.
inline double max_abs_increment(const ScalarField& f, const Offset& h) {
  const auto neg = h.negated(f.n());
  return std::max(max_increment(f, h).max_inc, max_increment(f, neg).max_inc);
}

/// max_x |u(x+h) − u(x)| (Euclidean).
inline double max_vector_increment(const VelocityField& u, const Offset& h) {
  const std::size_t n = u.u1.n();
  const auto wrap = [n](long c) { return static_cast<std::size_t>((c % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n)); };
  const std::size_t s1 = wrap(h.o1), s2 = wrap(h.o2);
  double best = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t jj = (j + s1) % n;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t kk = (k + s2) % n;
      best = std::max(best, std::hypot(u.u1.at(jj, kk) - u.u1.at(j, k), u.u2.at(jj, kk) - u.u2.at(j, k)));
    }
  }
  return best;
}

/// Smooth random field Σ a_m cos(k_m·x + φ_m) over 1 ≤ max(|m1|,|m2|) ≤ cutoff,
/// a_m ~ N(0,1)/|m|².
inline ScalarField random_band_limited(const TorusGeometry& g, int cutoff, std::mt19937_64& rng) {
  std::normal_distribution<double> amp(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  SpectralField hat(g);
  const double scale = static_cast<double>(g.size());
  // Lattice modes in the upper half plane (k2 > 0, or k2 = 0 and m1 > 0).
  for (int m1 = -cutoff; m1 <= cutoff; ++m1)
    for (int m2 = 0; m2 <= cutoff; ++m2) {
      if (m2 == 0 && m1 <= 0) continue;
      const double r2 = static_cast<double>(m1 * m1 + m2 * m2);
      const double a = amp(rng) / r2;
      const double ph = phase(rng);
      const std::size_t j = m1 >= 0 ? static_cast<std::size_t>(m1) : g.n - static_cast<std::size_t>(-m1);
      // cos(θ) = (e^{iθ} + e^{−iθ})/2; in r2c storage (k2 ≥ 0) the m2 = 0 row
      // holds both ±m1, handled by the c2r Hermitian convention.
      const auto c = std::polar(0.5 * a * scale, ph);
      if (m2 == 0) {
        hat.at(j, 0) += c;
        const std::size_t jn = (g.n - j) % g.n;
        hat.at(jn, 0) += std::conj(c);
      } else {
        hat.at(j, static_cast<std::size_t>(m2)) += c;
      }
    }
  return inverse(hat);
}

struct BEstimate {
  double b_hat = 0.0;
  std::vector<double> per_field;  // skipped fields absent
  std::size_t skipped = 0;
  std::size_t ensemble = 0;
  std::uint64_t seed = 0;
  int cutoff = 0;
  std::size_t n = 0;
};

/// Per field θ: b = max_h |u(x+h) − u(x)|_max / Ω₁[ω_θ](|h|), with ω_θ the concave
/// majorant of θ's measured increments and Ω₁ the B = 1 velocity functional.
/// B̂ is the ensemble maximum.
inline double field_b_ratio(const ScalarField& theta, std::size_t offset_budget) {
  const auto prof = increment_profile(theta, offset_budget);
  std::vector<std::pair<double, double>> pts;
  pts.reserve(prof.entries.size());
  for (const auto& e : prof.entries) pts.emplace_back(e.distance, max_abs_increment(theta, e.h));
  const auto emp = EmpiricalModulus::majorant(pts);
  if (emp.degenerate()) return std::numeric_limits<double>::quiet_NaN();
  const auto u = riesz_velocity(theta);
  double best = 0.0;
  for (const auto& e : prof.entries) {
    const double functional = emp.velocity_functional(e.distance);
    if (functional <= 0.0) continue;
    best = std::max(best, max_vector_increment(u, e.h) / functional);
  }
  return best;
}

inline BEstimate estimate_b(const TorusGeometry& g, std::size_t ensemble, std::uint64_t seed, int cutoff = 8,
                            std::size_t offset_budget = 0) {
  g.validate();
  if (ensemble < 1) throw InputError("estimate_b: ensemble size must be >= 1");
  if (cutoff < 1 || 3 * cutoff > static_cast<int>(g.n)) throw InputError("estimate_b: cutoff outside (0, n/3]");
  const std::size_t budget = offset_budget ? offset_budget : default_offset_budget(g.n);
  std::mt19937_64 rng(seed);
  BEstimate est;
  est.ensemble = ensemble;
  est.seed = seed;
  est.cutoff = cutoff;
  est.n = g.n;
  for (std::size_t i = 0; i < ensemble; ++i) {
    const auto theta = random_band_limited(g, cutoff, rng);
    const double b = field_b_ratio(theta, budget);
    if (!std::isfinite(b)) {
      ++est.skipped;
      continue;
    }
    est.per_field.push_back(b);
    est.b_hat = std::max(est.b_hat, b);
  }
  if (est.per_field.empty()) throw InputError("estimate_b: every sample field was constant");
  return est;
}

/// Same pipeline on caller-supplied fields (constant ones are skipped).
inline BEstimate estimate_b_from_fields(const std::vector<ScalarField>& fields, std::size_t offset_budget = 0) {
  BEstimate est;
  est.ensemble = fields.size();
  for (const auto& f : fields) {
    const std::size_t budget = offset_budget ? offset_budget : default_offset_budget(f.n());
    const double b = field_b_ratio(f, budget);
    if (!std::isfinite(b)) {
      ++est.skipped;
      continue;
    }
    est.per_field.push_back(b);
    est.b_hat = std::max(est.b_hat, b);
  }
  if (est.per_field.empty()) throw InputError("estimate_b: no non-constant sample fields");
  return est;
}

}  // namespace sqg
