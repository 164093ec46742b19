#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles/oracles.hpp"
#include "sqg/modulus.hpp"

using namespace sqg;

namespace {
const KnvModulus kDefault{ModulusParams{}};
}

TEST(ModulusParams, ConstructionConstraints) {
  EXPECT_NO_THROW(KnvModulus(ModulusParams{0.1, 0.05, 0.5}));
  EXPECT_THROW(KnvModulus(ModulusParams{0.1, 0.1, 0.5}), InputError);    // γ = δ
  EXPECT_THROW(KnvModulus(ModulusParams{0.9, 0.05, 0.5}), InputError);   // δ^{1.5} ≈ 0.853 > 0.45
  EXPECT_THROW(KnvModulus(ModulusParams{1.5, 0.05, 0.5}), InputError);   // δ > 1
  EXPECT_THROW(KnvModulus(ModulusParams{0.1, 0.05, 0.6}), InputError);   // β > 1/2
  EXPECT_THROW(KnvModulus(ModulusParams{0.1, 0.0, 0.5}), InputError);
  EXPECT_THROW(KnvModulus(ModulusParams{0.0, 0.05, 0.5}), InputError);
  try {
    KnvModulus(ModulusParams{0.1, 0.06, 0.5});
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma <= delta/2"), std::string::npos);
  }
  EXPECT_EQ(ModulusParams::beta_from_alpha(1.0), 0.5);
  EXPECT_EQ(ModulusParams::beta_from_alpha(0.3), 0.3);
}

TEST(Omega, PointValues) {
  EXPECT_EQ(kDefault(0.0), 0.0);
  EXPECT_NEAR(kDefault(0.04), 0.032, 1e-16);
  EXPECT_NEAR(kDefault(0.1 * std::exp(4.0)), kDefault(0.1) + 0.05 * std::log(2.0), 1e-15);
  EXPECT_THROW(kDefault(-1e-3), InputError);
  // 40-digit reference values.
  EXPECT_NEAR(kDefault(1e-6), 9.99e-7, 1e-20);
  EXPECT_NEAR(kDefault(0.05), 0.038819660112501051518, 1e-16);
  EXPECT_NEAR(kDefault(0.3), 0.080510925464478295289, 1e-16);
  EXPECT_NEAR(kDefault(2.0), 0.096327519738383562504, 1e-16);
  EXPECT_NEAR(kDefault(50.0), 0.11525344845381508044, 1e-16);
}

TEST(Omega, ContinuousAtKink) {
  const double d = kDefault.delta();
  EXPECT_EQ(kDefault(d), kDefault.omega_at_kink());
  EXPECT_NEAR(kDefault(std::nextafter(d, 1.0)), kDefault.omega_at_kink(), 1e-15);
}

TEST(Omega, Derivatives) {
  EXPECT_EQ(kDefault.derivative(0.0), 1.0);
  EXPECT_NEAR(kDefault.second_derivative(0.01), -7.5, 1e-12);
  EXPECT_NEAR(kDefault.derivative(0.2), 0.05 / (0.2 * (4.0 + std::log(2.0))), 1e-15);
  EXPECT_EQ(kDefault.second_derivative(0.0), -std::numeric_limits<double>::infinity());
  // Finite-difference oracles away from the kink.
  const auto w = [](double z) { return kDefault(z); };
  const auto dw = [](double z) { return kDefault.derivative(z); };
  for (double z : {0.003, 0.01, 0.07, 0.2, 3.0, 400.0}) {
    const double h = 1e-4 * std::min(z, std::abs(z - 0.1));
    EXPECT_NEAR(kDefault.derivative(z), oracle::derivative(w, z, h), 1e-9 * std::abs(kDefault.derivative(z)));
    EXPECT_NEAR(kDefault.second_derivative(z), oracle::derivative(dw, z, h), 1e-7 * std::abs(kDefault.second_derivative(z)));
  }
  EXPECT_NEAR(kDefault.second_derivative(0.01), oracle::derivative(dw, 0.01, 1e-6), 1e-6);
}

TEST(Omega, OneSidedAtKink) {
  const double d = kDefault.delta();
  const double left = kDefault.derivative(d, Side::Left);
  const double right = kDefault.derivative(d, Side::Right);
  EXPECT_NEAR(left, 1.0 - 1.5 * std::sqrt(0.1), 1e-15);
  EXPECT_NEAR(right, 0.05 / (0.1 * 4.0), 1e-15);
  EXPECT_LT(right, left);
  EXPECT_LT(kDefault.second_derivative(d, Side::Left), 0.0);
  EXPECT_LT(kDefault.second_derivative(d, Side::Right), 0.0);
}

TEST(Omega, ClosedFormMatchesQuadratureOfDerivative) {
  const auto grid = log_grid(0.1 * 1.0001, 1e6, 1000);
  for (double z : grid) {
    const auto q = integrate([](double t) { return kDefault.derivative(t); }, geometric_breaks(0.1, z), {1e-13, 0.0, 4000});
    const double expected = kDefault.omega_at_kink() + q.value;
    EXPECT_NEAR(kDefault(z), expected, 1e-10 * expected) << z;
  }
}

TEST(Omega, ConcaveAndSubadditive) {
  const auto grid = log_grid(1e-9, 1e5, 600);
  for (std::size_t i = 0; i + 1 < grid.size(); i += 3)
    for (std::size_t j = i + 1; j < grid.size(); j += 37) {
      const double a = grid[i], b = grid[j];
      EXPECT_GE(kDefault(0.5 * (a + b)), 0.5 * (kDefault(a) + kDefault(b)) - 1e-14);
    }
  for (double z : grid) EXPECT_LE(kDefault(2 * z), 2 * kDefault(z));
}

TEST(Omega, DifferenceIsAccurate) {
  for (double lo : {1e-8, 0.03, 0.0999, 0.1, 0.5, 1e4})
    for (double rel : {1e-12, 1e-6, 0.3, 5.0}) {
      const double hi = lo * (1 + rel);
      const double direct = kDefault(hi) - kDefault(lo);
      const double diff = kDefault.difference(lo, hi);
      EXPECT_GT(diff, 0.0);
      EXPECT_NEAR(diff, direct, 1e-15 * kDefault(hi) + 1e-12 * diff);
    }
  EXPECT_DOUBLE_EQ(kDefault.difference(0.3, 0.2), -kDefault.difference(0.2, 0.3));
}

TEST(ScaledModulus, Basics) {
  EXPECT_THROW(ScaledModulus(kDefault, 0.5), InputError);
  const ScaledModulus one(kDefault, 1.0);
  for (double z : log_grid(1e-6, 10.0, 100)) EXPECT_EQ(one(z), kDefault(z));
  const ScaledModulus s(kDefault, 64.0);
  EXPECT_EQ(omega_a(s, 0.0), 0.0);
  EXPECT_NEAR(s(1e-10) / 1e-10, 64.0, 2e-4 * 64.0);
  EXPECT_EQ(s.gradient_bound(), 64.0);
}

TEST(VelocityModulus, FrozenValues) {
  const VelocityModulus v(kDefault, 1.0);
  const std::vector<std::pair<double, double>> ref{{0.001, 0.0058018234150236838761}, {0.05, 0.10728895522299656929},
                                                   {0.1, 0.15761265482557980279},     {0.5, 0.2963305889284567667},
                                                   {3.0, 0.47430549337799628425},     {100.0, 0.87574657574016211061}};
  for (auto [z, val] : ref) EXPECT_NEAR(capital_omega(v, z), val, 1e-8 * val) << z;
}

TEST(VelocityModulus, MatchesSimpsonOracle) {
  const VelocityModulus v(kDefault, 1.0);
  const oracle::Omega w;
  for (double z : {0.04, 0.002, 0.37, 8.0}) {
    const double ref = oracle::capital_omega(w, 1.0, z);
    EXPECT_NEAR(v(z), ref, 1e-6 * ref) << z;
  }
}

TEST(VelocityModulus, LinearInB) {
  const VelocityModulus v1(kDefault, 1.0), v3(kDefault, 3.0);
  for (double z : {1e-5, 0.1, 7.0}) EXPECT_NEAR(v3(z), 3 * v1(z), 1e-14 * v3(z));
}

TEST(VelocityModulus, MonotoneAndSmallZetaBound) {
  const VelocityModulus v(kDefault, 1.0);
  double prev = 0.0;
  for (double z : log_grid(1e-10, 1e4, 200)) {
    const double val = v(z);
    EXPECT_GT(val, prev);
    prev = val;
    if (z <= 0.1) {
      EXPECT_LE(val, z * (3.0 + std::log(0.1 / z)));
    }
  }
  EXPECT_THROW(v(0.0), InputError);
  EXPECT_THROW(VelocityModulus(kDefault, 0.0), InputError);
}

TEST(VelocityModulus, TailMatchesExponentialIntegral) {
  // ∫_H^∞ ω′/η = (γ/δ) e⁴ E₁(4 + ln(H/δ)) for H ≥ δ.
  const VelocityModulus v(kDefault, 1.0, 1e-10);
  for (double h : {0.1, 0.7, 5.0, 1e3}) {
    const auto t = v.tail(h, {1e-12, 1e-300, 4000});
    const double ref = 0.05 / 0.1 * std::exp(4.0) * -std::expint(-(4.0 + std::log(h / 0.1)));
    EXPECT_NEAR(t.value, ref, 1e-9 * ref) << h;
    EXPECT_LE(t.value, 0.05 / (4 * h));
  }
  EXPECT_NEAR(v.tail(5.0, {1e-12, 1e-300, 4000}).value, 0.0011341009408607314865, 1e-14);
}

TEST(Validate, DefaultsPassEveryCheck) {
  const auto rep = validate(kDefault);
  EXPECT_TRUE(rep.all_pass());
  EXPECT_EQ(rep.checks.size(), 7u);
  for (const auto& c : rep.checks) EXPECT_TRUE(c.pass) << c.name << ": " << c.detail;
  EXPECT_GT(std::abs(kDefault.second_derivative(1e-10)), 1e3);
}

TEST(Validate, OtherAdmissibleParameters) {
  for (auto p : {ModulusParams{0.01, 0.005, 0.5}, ModulusParams{0.05, 0.01, 0.25}, ModulusParams{1e-3, 5e-4, 0.5}})
    EXPECT_TRUE(validate(KnvModulus(p)).all_pass());
}
