#pragma once

// Empirical modulus-of-continuity measurement on grid fields: per-offset
// maximal increments, the deficit against ω_A, breakthrough detection and the
// gradient bound ‖∇θ‖_∞ ≤ A·ω′(0).

#include <algorithm>
#include <cmath>
#include <compare>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sqg/dynamics.hpp"
#include "sqg/errors.hpp"
#include "sqg/modulus.hpp"
#include "sqg/torus_spectral.hpp"

namespace sqg {

/// Grid displacement, components canonical in (−n/2, n/2].
struct Offset {
  long o1 = 0;
  long o2 = 0;
  auto operator<=>(const Offset&) const = default;

  static Offset canonical(long a, long b, std::size_t n) {
    const long sn = static_cast<long>(n);
    const auto wrap = [sn](long c) {
      c %= sn;
      if (c < 0) c += sn;
      return c > sn / 2 ? c - sn : c;
    };
    return {wrap(a), wrap(b)};
  }
  Offset negated(std::size_t n) const { return canonical(-o1, -o2, n); }
};

struct IncrementEntry {
  Offset h;
  double distance = 0.0;  // torus-minimal |h|
  double max_inc = 0.0;   // max_x θ(x+h) − θ(x)
  std::size_t base_j = 0;  // argmax x (lexicographically first)
  std::size_t base_k = 0;
};

struct IncrementProfile {
  TorusGeometry geometry;
  std::vector<IncrementEntry> entries;  // sorted by offset

  const IncrementEntry* find(const Offset& h) const {
    auto it = std::lower_bound(entries.begin(), entries.end(), h,
                               [](const IncrementEntry& e, const Offset& o) { return e.h < o; });
    return it != entries.end() && it->h == h ? &*it : nullptr;
  }
};

/// max over grid nodes x of θ(x+h) − θ(x), with the first maximising node.
inline IncrementEntry max_increment(const ScalarField& theta, const Offset& h) {
  const auto& g = theta.geometry();
  const std::size_t n = g.n;
  const auto shift = [n](long o) { return static_cast<std::size_t>((o % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n)); };
  const std::size_t s1 = shift(h.o1), s2 = shift(h.o2);
  const auto v = theta.values();
  IncrementEntry e{h, g.offset_distance(h.o1, h.o2), -std::numeric_limits<double>::infinity(), 0, 0};
  for (std::size_t j = 0; j < n; ++j) {
    const double* row = v.data() + j * n;
    const double* shifted = v.data() + ((j + s1) % n) * n;
    const std::size_t split = n - s2;
    for (std::size_t k = 0; k < split; ++k) {
      const double diff = shifted[k + s2] - row[k];
      if (diff > e.max_inc) {
        e.max_inc = diff;
        e.base_j = j;
        e.base_k = k;
      }
    }
    for (std::size_t k = split; k < n; ++k) {
      const double diff = shifted[k - split] - row[k];
      if (diff > e.max_inc) {
        e.max_inc = diff;
        e.base_j = j;
        e.base_k = k;
      }
    }
  }
  return e;
}

struct ProfileOptions {
  bool full_sweep = false;
  /// Ranks offsets for refinement (higher = closer to violating). Receives
  /// (distance, max_inc). Defaults to max_inc/distance.
  std::function<double(double, double)> score;
  std::size_t refine_top = 8;
};

inline std::size_t default_offset_budget(std::size_t n) { return 8 * n; }

/// Coarse-to-fine increment sweep: axis-aligned and diagonal offsets up to
/// n/2, then ±2 neighbourhoods of the worst-scoring offsets until the budget
/// is spent. `full_sweep` evaluates every nonzero offset instead.
inline IncrementProfile increment_profile(const ScalarField& theta, std::size_t offset_budget,
                                          const ProfileOptions& opt = {}) {
  detail::require_finite(theta, "increment_profile");
  const auto& g = theta.geometry();
  const std::size_t n = g.n;
  if (!opt.full_sweep && offset_budget < n)
    throw StructuralError("increment_profile: offset budget " + std::to_string(offset_budget) +
                          " is below one axis sweep (" + std::to_string(n) + ")");

  std::set<Offset> chosen;
  std::vector<Offset> order;
  const auto add = [&](long a, long b) {
    const auto o = Offset::canonical(a, b, n);
    if ((o.o1 == 0 && o.o2 == 0) || chosen.count(o)) return;
    chosen.insert(o);
    order.push_back(o);
  };

  IncrementProfile prof{g, {}};
  if (opt.full_sweep) {
    for (long a = -static_cast<long>(n) / 2 + 1; a <= static_cast<long>(n) / 2; ++a)
      for (long b = -static_cast<long>(n) / 2 + 1; b <= static_cast<long>(n) / 2; ++b) add(a, b);
    for (const auto& o : order) prof.entries.push_back(max_increment(theta, o));
  } else {
    const long half = static_cast<long>(n) / 2;
    for (long s = 1; s <= half; ++s) {
      add(s, 0);
      add(0, s);
    }
    for (long s = 1; s <= half; ++s) {
      add(-s, 0);
      add(0, -s);
    }
    for (long s = 1; s <= half; ++s) {
      add(s, s);
      add(-s, -s);
      add(s, -s);
      add(-s, s);
    }
    if (order.size() > offset_budget) {
      for (std::size_t i = offset_budget; i < order.size(); ++i) chosen.erase(order[i]);
      order.resize(offset_budget);
    }
    for (const auto& o : order) prof.entries.push_back(max_increment(theta, o));

    const auto score = [&](const IncrementEntry& e) {
      return opt.score ? opt.score(e.distance, e.max_inc) : e.max_inc / e.distance;
    };
    while (prof.entries.size() < offset_budget) {
      std::vector<const IncrementEntry*> ranked;
      ranked.reserve(prof.entries.size());
      for (const auto& e : prof.entries) ranked.push_back(&e);
      std::sort(ranked.begin(), ranked.end(), [&](const IncrementEntry* x, const IncrementEntry* y) {
        const double sx = score(*x), sy = score(*y);
        if (sx != sy) return sx > sy;
        return x->h < y->h;
      });
      // Neighbourhoods of the top `refine_top` centres that still have unmeasured offsets.
      std::vector<Offset> fresh;
      std::size_t centres = 0;
      for (std::size_t r = 0; r < ranked.size() && centres < opt.refine_top; ++r) {
        const Offset c = ranked[r]->h;
        const std::size_t before = fresh.size();
        for (long a = -2; a <= 2; ++a)
          for (long b = -2; b <= 2; ++b) {
            const auto o = Offset::canonical(c.o1 + a, c.o2 + b, n);
            if ((o.o1 == 0 && o.o2 == 0) || chosen.count(o)) continue;
            if (std::find(fresh.begin(), fresh.end(), o) != fresh.end()) continue;
            fresh.push_back(o);
          }
        centres += fresh.size() > before;
      }
      if (fresh.empty()) break;
      for (const auto& o : fresh) {
        if (prof.entries.size() >= offset_budget) break;
        chosen.insert(o);
        prof.entries.push_back(max_increment(theta, o));
      }
    }
  }
  std::sort(prof.entries.begin(), prof.entries.end(),
            [](const IncrementEntry& a, const IncrementEntry& b) { return a.h < b.h; });
  return prof;
}

/// M = max_h (max_inc(h) − ω_A(|h|)) over offsets with |h| ≤ A·D; M < 0 means ω_A
/// is preserved on the measured pairs and M = 0 is a breakthrough.
struct DeficitReport {
  double deficit = -std::numeric_limits<double>::infinity();
  Offset witness_offset;
  std::size_t base_j = 0;
  std::size_t base_k = 0;
  double zeta = 0.0;
  double t = 0.0;
  double smallest_zeta = 0.0;  // ζ = 0 is invisible on the grid
};

inline DeficitReport deficit(const IncrementProfile& profile, const ScaledModulus& s, double t = 0.0) {
  if (profile.entries.empty()) throw InputError("deficit: empty increment profile");
  const double zeta_max = s.a() * profile.geometry.d;
  DeficitReport rep;
  rep.t = t;
  rep.smallest_zeta = std::numeric_limits<double>::infinity();
  bool any = false;
  for (const auto& e : profile.entries) {
    if (e.distance > zeta_max) continue;
    rep.smallest_zeta = std::min(rep.smallest_zeta, e.distance);
    const double gap = e.max_inc - s(e.distance);
    if (!any || gap > rep.deficit) {
      any = true;
      rep.deficit = gap;
      rep.witness_offset = e.h;
      rep.base_j = e.base_j;
      rep.base_k = e.base_k;
      rep.zeta = e.distance;
    }
  }
  return rep;
}

/// Refinement scorer that ranks offsets by their gap to ω_A.
inline ProfileOptions deficit_profile_options(const ScaledModulus& s, bool full_sweep = false) {
  ProfileOptions opt;
  opt.full_sweep = full_sweep;
  opt.score = [s](double zeta, double inc) { return inc - s(zeta); };
  return opt;
}

struct GradientCheck {
  bool pass = true;
  bool at_equality = false;
  double grad_sup = 0.0;
  double bound = 0.0;  // A·ω′(0)
  double margin = 0.0;  // bound − grad_sup
};

/// ‖∇θ‖_∞ ≤ A·ω′(0); equality within 1e-6 relative is flagged and passes.
inline GradientCheck gradient_bound_check(const ScalarField& theta, const ScaledModulus& s) {
  GradientCheck c;
  c.grad_sup = grad_sup_norm(theta);
  c.bound = s.gradient_bound();
  c.margin = c.bound - c.grad_sup;
  const double tol = 1e-6 * c.bound;
  c.at_equality = std::abs(c.margin) <= tol;
  c.pass = c.margin >= -tol;
  return c;
}

struct BreakthroughEvent {
  double t = 0.0;
  double x1 = 0.0, x2 = 0.0;  // x = y + h*
  double y1 = 0.0, y2 = 0.0;
  double zeta = 0.0;
  double deficit = 0.0;
  double ddt_estimate = 0.0;  // ∂t(θ(x) − θ(y)) from the discrete RHS
};

inline constexpr double kDefaultEventTolerance = 1e-3;

/// Emits an event when M ≥ −tol·ω_A(ζ*), evaluating ∂t(θ(x) − θ(y)) at the
/// witness pair. The sign is recorded, not asserted.
inline std::optional<BreakthroughEvent> breakthrough_watch(const SimState& state, const Forcing& forcing,
                                                           const ScaledModulus& s, const DeficitReport& rep,
                                                           double relative_tolerance = kDefaultEventTolerance,
                                                           bool dealias = true) {
  const double tol = relative_tolerance * s(rep.zeta);
  if (rep.deficit < -tol) return std::nullopt;
  const auto& g = state.theta.geometry();
  const auto r = rhs(state, forcing, dealias);
  const std::size_t n = g.n;
  const auto wrap = [n](long c) { return static_cast<std::size_t>((c % static_cast<long>(n) + static_cast<long>(n)) % static_cast<long>(n)); };
  const std::size_t xj = wrap(static_cast<long>(rep.base_j) + rep.witness_offset.o1);
  const std::size_t xk = wrap(static_cast<long>(rep.base_k) + rep.witness_offset.o2);
  const double h = g.spacing();
  BreakthroughEvent ev;
  ev.t = state.t;
  ev.x1 = static_cast<double>(xj) * h;
  ev.x2 = static_cast<double>(xk) * h;
  ev.y1 = static_cast<double>(rep.base_j) * h;
  ev.y2 = static_cast<double>(rep.base_k) * h;
  ev.zeta = rep.zeta;
  ev.deficit = rep.deficit;
  ev.ddt_estimate = r.at(xj, xk) - r.at(rep.base_j, rep.base_k);
  return ev;
}

/// Per-sample monitoring along a trajectory: deficit, events and gradient checks.
class TrajectoryMonitor {
 public:
  TrajectoryMonitor(ScaledModulus s, Forcing forcing, std::size_t offset_budget, bool full_sweep = false,
                    double event_tolerance = kDefaultEventTolerance, bool dealias = true)
      : modulus_(std::move(s)),
        forcing_(std::move(forcing)),
        budget_(offset_budget),
        full_sweep_(full_sweep),
        event_tolerance_(event_tolerance),
        dealias_(dealias) {}

  double observe(const SimState& state) {
    const auto prof = increment_profile(state.theta, budget_, deficit_profile_options(modulus_, full_sweep_));
    const auto rep = deficit(prof, modulus_, state.t);
    deficits_.push_back(rep);
    gradient_checks_.push_back(gradient_bound_check(state.theta, modulus_));
    if (auto ev = breakthrough_watch(state, forcing_, modulus_, rep, event_tolerance_, dealias_))
      events_.push_back(*ev);
    return rep.deficit;
  }

  RunHooks hooks() {
    RunHooks h;
    h.deficit = [this](const SimState& s) { return observe(s); };
    return h;
  }

  const std::vector<DeficitReport>& deficits() const { return deficits_; }
  const std::vector<GradientCheck>& gradient_checks() const { return gradient_checks_; }
  const std::vector<BreakthroughEvent>& events() const { return events_; }
  bool gradient_bound_held() const {
    return std::all_of(gradient_checks_.begin(), gradient_checks_.end(), [](const auto& c) { return c.pass; });
  }
  bool modulus_preserved() const {
    return std::all_of(deficits_.begin(), deficits_.end(), [](const auto& d) { return d.deficit < 0.0; });
  }

 private:
  ScaledModulus modulus_;
  Forcing forcing_;
  std::size_t budget_;
  bool full_sweep_;
  double event_tolerance_;
  bool dealias_;
  std::vector<DeficitReport> deficits_;
  std::vector<GradientCheck> gradient_checks_;
  std::vector<BreakthroughEvent> events_;
};

}  // namespace sqg
