#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "sqg/quadrature.hpp"

using namespace sqg;

TEST(Quadrature, Polynomials) {
  // K15 is exact for degree ≤ 22 on a single panel.
  const auto r = integrate([](double x) { return std::pow(x, 10) - 3 * x * x; }, -1.0, 2.0);
  EXPECT_NEAR(r.value, (std::pow(2.0, 11) + 1) / 11.0 - (8.0 + 1.0), 1e-12);
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.evaluations, 15u);
}

TEST(Quadrature, EndpointSingularity) {
  const auto r = integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, {1e-12, 0.0, 10000});
  EXPECT_NEAR(r.value, 2.0, 1e-10);
}

TEST(Quadrature, KinkOnBreakpoint) {
  const std::vector<double> breaks{-1.0, 0.3, 2.0};
  const auto r = integrate([](double x) { return std::abs(x - 0.3); }, breaks);
  EXPECT_NEAR(r.value, 0.5 * 1.3 * 1.3 + 0.5 * 1.7 * 1.7, 1e-14);
  EXPECT_EQ(r.evaluations, 30u);
}

TEST(Quadrature, ReportsNonConvergence) {
  const auto r = integrate([](double x) { return std::sin(1.0 / x); }, 1e-9, 1.0, {1e-14, 0.0, 20});
  EXPECT_FALSE(r.converged);
  EXPECT_GT(r.error, 0.0);
}

TEST(Quadrature, Oscillatory) {
  const auto r = integrate([](double x) { return std::cos(50 * x); }, 0.0, std::numbers::pi / 2);
  EXPECT_NEAR(r.value, std::sin(25 * std::numbers::pi) / 50, 1e-12);
}

TEST(Breaks, GeometricPartition) {
  const std::vector<double> extra{3.0, 100.0};
  const auto b = geometric_breaks(1.0, 10.0, 2.0, extra);
  EXPECT_EQ(b.front(), 1.0);
  EXPECT_EQ(b.back(), 10.0);
  EXPECT_TRUE(std::is_sorted(b.begin(), b.end()));
  EXPECT_NE(std::find(b.begin(), b.end(), 3.0), b.end());
  EXPECT_EQ(std::find(b.begin(), b.end(), 100.0), b.end());
  for (std::size_t i = 0; i + 1 < b.size(); ++i) EXPECT_LE(b[i + 1] / b[i], 2.0 + 1e-12);
  EXPECT_THROW(geometric_breaks(0.0, 1.0), std::invalid_argument);
}

TEST(Breaks, LogGridEndpointsExact) {
  const auto g = log_grid(1e-10, 0.1, 512);
  ASSERT_EQ(g.size(), 512u);
  EXPECT_EQ(g.front(), 1e-10);
  EXPECT_EQ(g.back(), 0.1);
  for (std::size_t i = 1; i + 1 < g.size(); ++i) EXPECT_NEAR(g[i + 1] / g[i], g[1] / g[0], 1e-12);
}
