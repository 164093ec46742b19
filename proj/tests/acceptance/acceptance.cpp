// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "oracles/oracles.hpp"
#include "sqg/certifier.hpp"
#include "sqg/dynamics.hpp"
#include "sqg/field_io.hpp"
#include "sqg/modulus.hpp"
#include "sqg/monitor.hpp"
#include "sqg/report_json.hpp"
#include "support/manufactured.hpp"

using namespace sqg;

namespace {

constexpr double kPi = std::numbers::pi;

struct Verdict {
  bool pass = false;
  std::string detail;
};

double relative_sup_error(const ScalarField& got, const ScalarField& want) {
  return support::max_abs_diff(got, want) / sup_norm(want);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// 1. Riesz velocity and (−Δ)^{1/2} on single modes, n ∈ {32, 64, 128}, 1e-12 relative.
Verdict spectral_exactness() {
  double worst = 0.0;
  for (std::size_t n : {32, 64, 128}) {
    const double d = 2 * kPi;
    const auto g = TorusGeometry::make(n, d);
    for (auto [m1, m2] : std::vector<std::pair<int, int>>{{1, 0}, {0, 1}, {1, 1}, {3, 4}, {-5, 2}, {7, -9}}) {
      const double k1 = m1, k2 = m2, mag = std::hypot(k1, k2);
      const auto phase = [&](double x, double y) { return k1 * x + k2 * y; };
      const auto theta = ScalarField::from_function(g, [&](double x, double y) { return std::sin(phase(x, y)); });
      const auto u = riesz_velocity(theta);
      const auto e1 = ScalarField::from_function(g, [&](double x, double y) { return -k2 / mag * std::cos(phase(x, y)); });
      const auto e2 = ScalarField::from_function(g, [&](double x, double y) { return k1 / mag * std::cos(phase(x, y)); });
      const auto el = ScalarField::from_function(g, [&](double x, double y) { return mag * std::sin(phase(x, y)); });
      if (m2 != 0) worst = std::max(worst, relative_sup_error(u.u1, e1));
      if (m1 != 0) worst = std::max(worst, relative_sup_error(u.u2, e2));
      worst = std::max(worst, relative_sup_error(fractional_laplacian_half(theta), el));
    }
  }
  return {worst <= 1e-12, fmt("max relative error %.3e (tol 1e-12)", worst)};
}

// 2. validate() on defaults and closed form vs quadrature of ω′ on 10³ points.
Verdict modulus_validity() {
  const KnvModulus m{ModulusParams{0.1, 0.05, 0.5}};
  const auto rep = validate(m);
  double worst = 0.0;
  for (double z : log_grid(0.1 * 1.0001, 1e6, 1000)) {
    const auto q = integrate([&](double t) { return m.derivative(t); }, geometric_breaks(0.1, z), {1e-13, 0.0, 4000});
    const double expected = m.omega_at_kink() + q.value;
    worst = std::max(worst, std::abs(m(z) - expected) / expected);
  }
  return {rep.all_pass() && worst <= 1e-10,
          std::string(rep.all_pass() ? "all checks pass" : "validate failed") +
              fmt(", closed form vs quadrature %.3e (tol 1e-10)", worst)};
}

// 3. Ω against a log-variable Simpson oracle, 50 points in [δ/100, 100δ], 1e-6 relative.
Verdict omega_quadrature() {
  const KnvModulus m{ModulusParams{}};
  const VelocityModulus v(m, 1.0);
  const oracle::Omega w;
  double worst = 0.0;
  for (double z : log_grid(1e-3, 10.0, 50)) {
    const double ref = oracle::capital_omega(w, 1.0, z);
    worst = std::max(worst, std::abs(v(z) - ref) / ref);
  }
  return {worst <= 1e-6, fmt("max relative deviation %.3e (tol 1e-6)", worst)};
}

// 4. Dissipation sharpness on 512-point log grids in both regimes.
Verdict dissipation_sharpness() {
  const KnvModulus m{ModulusParams{}};
  const double coeff = m.beta() * (1 + m.beta()) / kPi;
  double worst_small = -INFINITY, worst_large = -INFINITY;
  bool converged = true;
  for (double z : log_grid(1e-10, m.delta(), 512)) {
    const auto r = dissipation_bound(m, z);
    converged = converged && r.converged;
    worst_small = std::max(worst_small, r.value + coeff * std::pow(z, m.beta()));
  }
  for (double z : log_grid(m.delta(), 1e3, 512)) {
    const auto r = dissipation_bound(m, z);
    converged = converged && r.converged;
    worst_large = std::max(worst_large, r.value + m(z) / z / kPi);
  }
  return {converged && worst_small <= 0.0 && worst_large <= 0.0,
          fmt("max(D + bound): small %.3e, large %.3e (need <= 0)", worst_small, worst_large)};
}

// 5. Auxiliary chain with defaults.
Verdict auxiliary_chain() {
  const auto rep = verify_auxiliary_chain(KnvModulus{ModulusParams{}});
  std::string detail;
  for (const auto& c : rep.checks) detail += (detail.empty() ? "" : ", ") + c.name + (c.pass ? " ok" : " FAILED");
  return {rep.all_pass() && rep.checks.size() == 6, detail};
}

// Shared setup for criteria 6, 7 and 9.
struct Experiment {
  ModulusParams params{0.01, 0.005, 0.5};
  ForcingSpec forcing{{{1e-4, 1, 1, 0.0, 0.0}}, 2 * kPi};
  std::uint64_t seed = 20240611;
  std::size_t n = 256;

  ScalarField theta0() const {
    return ScalarField::from_function(TorusGeometry::make(n, 2 * kPi), [](double x, double y) {
      return 2e-3 * std::sin(x) + 1e-3 * std::sin(2 * y + 0.5);
    });
  }
};

struct CertificationOutcome {
  BEstimate b;
  CertificationReport report;
  std::string bytes;
};

CertificationOutcome certify(const Experiment& e) {
  CertificationOutcome out;
  out.b = estimate_b(TorusGeometry::make(128, 2 * kPi), 32, e.seed);
  const auto pc = ProblemConstants::from_forcing(e.forcing, out.b.b_hat);
  out.report = choose_a(e.theta0(), pc, KnvModulus(e.params));
  out.bytes = dump(to_json(out.b)) + dump(to_json(out.report));
  return out;
}

Verdict end_to_end(const CertificationOutcome& c) {
  const auto& r = c.report;
  const bool ok = r.a && *r.a <= std::ldexp(1.0, 20) && r.small_zeta.pass && r.large_zeta.pass &&
                  r.small_zeta.worst_margin < 0 && r.large_zeta.worst_margin < 0 && r.initial_data.pass;
  std::string detail = fmt("B_hat %.6f, A ", c.b.b_hat) + (r.a ? fmt("%g", *r.a) : std::string("none")) +
                       fmt(", margins small %.3e large %.3e", r.small_zeta.worst_margin, r.large_zeta.worst_margin);
  if (!ok) detail += "; " + r.diagnosis;
  return {ok, detail};
}

struct SimulationOutcome {
  bool completed = false;
  bool gradient_held = false;
  bool preserved = false;
  double worst_deficit = -INFINITY;
  std::size_t samples = 0;
  std::size_t events = 0;
  std::string bytes;
};

SimulationOutcome simulate(const Experiment& e, double a) {
  const ScaledModulus s(KnvModulus(e.params), a);
  const Forcing f(e.forcing);
  TrajectoryMonitor monitor(s, f, default_offset_budget(e.n));
  SimConfig cfg;
  cfg.t_end = 5.0;
  cfg.output_stride = 25;
  const auto traj = run(e.theta0(), f, cfg, monitor.hooks());
  SimulationOutcome out;
  out.completed = traj.completed;
  out.gradient_held = monitor.gradient_bound_held();
  out.preserved = monitor.modulus_preserved();
  out.samples = traj.samples.size();
  out.events = monitor.events().size();
  for (const auto& d : monitor.deficits()) out.worst_deficit = std::max(out.worst_deficit, d.deficit);
  std::ostringstream csv;
  write_trajectory_csv(csv, traj.samples);
  Json deficits = Json::array();
  for (const auto& d : monitor.deficits()) deficits.push_back(to_json(d));
  out.bytes = csv.str() + dump(deficits) + encode_snapshot(traj.final_state.theta, traj.final_state.t);
  return out;
}

Verdict headline(const SimulationOutcome& s, double a) {
  return {s.completed && s.gradient_held && s.preserved && s.samples > 1,
          fmt("A %g, %g samples, max deficit M %.3e", a, double(s.samples), s.worst_deficit) +
              (s.gradient_held ? ", gradient bound held" : ", gradient bound violated") +
              (s.completed ? "" : ", run did not complete")};
}

// 8. Manufactured-solution convergence of the integrator.
Verdict integrator_order() {
  const support::Manufactured mms;
  const double e1 = mms.error(32, 4e-3, 0.4), e2 = mms.error(32, 2e-3, 0.4), e3 = mms.error(32, 1e-3, 0.4);
  const double r1 = std::log2(e1 / e2), r2 = std::log2(e2 / e3);
  return {r1 >= 3.9 && r2 >= 3.9, fmt("rates %.3f, %.3f (need >= 3.9)", r1, r2)};
}

int failures = 0;

void report(int id, const char* name, const std::function<Verdict()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  failures += !v.pass;
  std::printf("%s %d %s: %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str(), secs);
  std::fflush(stdout);
}

}  // namespace

int main() {
  report(1, "spectral exactness", spectral_exactness);
  report(2, "modulus validity", modulus_validity);
  report(3, "velocity modulus quadrature", omega_quadrature);
  report(4, "dissipation sharpness", dissipation_sharpness);
  report(5, "auxiliary chain", auxiliary_chain);

  const Experiment exp;
  CertificationOutcome cert;
  report(6, "end-to-end certification", [&] {
    cert = certify(exp);
    return end_to_end(cert);
  });

  SimulationOutcome sim;
  report(7, "headline simulation", [&]() -> Verdict {
    if (!cert.report.a) return {false, "no certified A from criterion 6"};
    sim = simulate(exp, *cert.report.a);
    return headline(sim, *cert.report.a);
  });

  report(8, "integrator order", integrator_order);

  report(9, "determinism", [&]() -> Verdict {
    if (!cert.report.a) return {false, "no certified A from criterion 6"};
    const auto cert2 = certify(exp);
    const auto sim2 = simulate(exp, *cert.report.a);
    const bool same_cert = cert2.bytes == cert.bytes;
    const bool same_sim = sim2.bytes == sim.bytes;
    return {same_cert && same_sim, std::string("certification reports ") + (same_cert ? "identical" : "differ") +
                                       ", trajectory outputs " + (same_sim ? "identical" : "differ")};
  });

  std::printf("%s: %d of 9 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
