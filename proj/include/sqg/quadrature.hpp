#pragma once

// Globally adaptive Gauss–Kronrod (G7/K15) quadrature on a user-supplied
// partition. Intervals are bisected in order of largest error estimate until
// the summed estimate meets max(abs_tol, rel_tol·|value|).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

namespace sqg {

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;
  std::size_t evaluations = 0;

  QuadratureResult& operator+=(const QuadratureResult& o) {
    value += o.value;
    error += o.error;
    converged = converged && o.converged;
    evaluations += o.evaluations;
    return *this;
  }
};

struct QuadratureOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-300;
  std::size_t max_intervals = 4000;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> kGaussWeights{0.129484966168869693270611432679082,
                                                     0.279705391489276667901467771423780,
                                                     0.381830050505118944950369775488975,
                                                     0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gauss_kronrod_15(F& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (std::size_t i = 0; i < 7; ++i) {
    const double dx = half * kKronrodNodes[i];
    const double f1 = f(centre - dx);
    const double f2 = f(centre + dx);
    kronrod += kKronrodWeights[i] * (f1 + f2);
    if (i % 2 == 1) gauss += kGaussWeights[i / 2] * (f1 + f2);
  }
  kronrod *= half;
  gauss *= half;
  return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

/// ∫ f over [breaks.front(), breaks.back()], using `breaks` as the initial
/// partition (place kinks and scale changes there).
template <class F>
QuadratureResult integrate(F&& f, std::span<const double> breaks, const QuadratureOptions& opt = {}) {
  QuadratureResult result;
  if (breaks.size() < 2) return result;
  std::priority_queue<detail::Panel> heap;
  double total = 0.0, total_err = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    auto p = detail::gauss_kronrod_15(f, breaks[i], breaks[i + 1]);
    result.evaluations += 15;
    total += p.value;
    total_err += p.error;
    heap.push(p);
  }
  // Sum of tiny per-panel errors can stall once it reaches roundoff in the
  // running total; the loop also stops when the largest panel no longer splits.
  while (!heap.empty() && total_err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
    if (heap.size() >= opt.max_intervals) break;
    const auto worst = heap.top();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    const auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    const auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    result.evaluations += 30;
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum from the panel list to shed accumulated cancellation in `total`.
  double value = 0.0, err = 0.0;
  std::vector<detail::Panel> panels;
  panels.reserve(heap.size());
  while (!heap.empty()) {
    panels.push_back(heap.top());
    heap.pop();
  }
  std::sort(panels.begin(), panels.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
  for (const auto& p : panels) {
    value += p.value;
    err += p.error;
  }
  result.value = value;
  result.error = err;
  result.converged = err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(value)) * 1.000001;
  return result;
}

template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureOptions& opt = {}) {
  const std::array<double, 2> breaks{a, b};
  return integrate(std::forward<F>(f), std::span<const double>(breaks), opt);
}

/// Geometric partition of [a, b] (a > 0) with successive ratio <= `ratio`,
/// with `extra` points merged in.
inline std::vector<double> geometric_breaks(double a, double b, double ratio = 2.0,
                                            std::span<const double> extra = {}) {
  if (!(a > 0.0) || !(b > a)) throw std::invalid_argument("geometric_breaks needs 0 < a < b");
  std::vector<double> out;
  const auto count = static_cast<std::size_t>(std::ceil(std::log(b / a) / std::log(ratio)));
  out.reserve(count + 1 + extra.size());
  for (std::size_t i = 0; i <= count; ++i)
    out.push_back(i == count ? b : a * std::pow(b / a, static_cast<double>(i) / static_cast<double>(count)));
  for (double x : extra)
    if (x > a && x < b) out.push_back(x);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// `count` log-spaced points on [lo, hi], endpoints exact.
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = hi;
    return out;
  }
  const double ratio = std::log(hi / lo);
  for (std::size_t i = 0; i < count; ++i)
    out[i] = lo * std::exp(ratio * static_cast<double>(i) / static_cast<double>(count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace sqg
