#pragma once

#include <cmath>
#include <numbers>

#include "sqg/dynamics.hpp"

namespace support {

using namespace sqg;

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.values().size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

// θ = e^{−t}(sin κx1 + sin 2κx2) solves the equation with
// f = e^{−t}((κ−1) sin κx1 + (2κ−1) sin 2κx2) − κ e^{−2t} cos κx1 cos 2κx2.
struct Manufactured {
  double d = 1.0;
  double kappa() const { return 2 * std::numbers::pi / d; }
  ScalarField exact(const TorusGeometry& g, double t) const {
    const double k = kappa();
    return ScalarField::from_function(g, [&](double x, double y) { return std::exp(-t) * (std::sin(k * x) + std::sin(2 * k * y)); });
  }
  Forcing forcing() const {
    const double k = kappa();
    return Forcing(Forcing::Callable([k](const TorusGeometry& g, double t) {
      return ScalarField::from_function(g, [&](double x, double y) {
        return std::exp(-t) * ((k - 1) * std::sin(k * x) + (2 * k - 1) * std::sin(2 * k * y)) -
               k * std::exp(-2 * t) * std::cos(k * x) * std::cos(2 * k * y);
      });
    }));
  }
  double error(std::size_t n, double dt, double t_end) const {
    const auto g = TorusGeometry::make(n, d);
    SimState s{exact(g, 0), 0};
    const auto f = forcing();
    const auto steps = static_cast<std::size_t>(std::llround(t_end / dt));
    for (std::size_t i = 0; i < steps; ++i) s = step(s, f, dt);
    return max_abs_diff(s.theta, exact(g, steps * dt));
  }
};

}  // namespace support
