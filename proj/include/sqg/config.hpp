#pragma once

// key = value run configuration. '#' starts a comment; unknown keys are errors.
//
//   seed = 42                       (required)
//   geometry.n = 128
//   geometry.d = 6.283185307179586
//   modulus.delta / modulus.gamma
//   modulus.beta = auto | <real>       auto → min(1/2, α) from the forcing
//   modulus.b = auto | <real>
//   scaling.a = auto | <real>
//   forcing.modes = a,m1,m2,sigma,phi ; ...      f = Σ a sin(k·x + σt + φ)
//   initial.modes = a,m1,m2,phi ; ...            θ₀ = Σ a sin(k·x + φ)
//   initial.snapshot = path
//   sim.cfl_factor / sim.t_end / sim.dealias / sim.dt_max
//   output.dir / output.stride
//   monitor.offset_budget / monitor.full_offsets / monitor.event_tol
//   estimate_b.n / estimate_b.ensemble / estimate_b.cutoff
//   search.delta = lo,hi,count     search.gamma = lo,hi,count     search.a = <real>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sqg/dynamics.hpp"
#include "sqg/errors.hpp"
#include "sqg/field_io.hpp"
#include "sqg/modulus.hpp"

namespace sqg {

struct InitialMode {
  double amplitude = 0.0;
  int m1 = 0, m2 = 0;
  double phase = 0.0;
};

struct GridRange {
  double lo = 0.0, hi = 0.0;
  std::size_t count = 0;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t n = 128;
  double d = 2.0 * std::numbers::pi;
  ModulusParams modulus;
  std::optional<double> b;  // empty → estimate
  std::optional<double> a;  // empty → choose_a
  ForcingSpec forcing;
  std::vector<InitialMode> initial_modes;
  std::string initial_snapshot;
  std::string output_dir;  // empty → --out or "out"
  SimConfig sim;
  std::size_t offset_budget = 0;  // 0 → 8n
  bool full_offsets = false;
  double event_tol = 1e-3;
  std::size_t estimate_n = 128;
  std::size_t estimate_ensemble = 32;
  int estimate_cutoff = 8;
  GridRange search_delta{0.005, 0.2, 10};
  GridRange search_gamma{0.001, 0.1, 10};
  double search_a = 1.0;
  std::map<std::string, std::string> echo;  // keys as given, for manifests

  TorusGeometry geometry() const { return TorusGeometry::make(n, d); }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::exception&) {
    throw InputError("config: " + key + ": not a number: '" + v + "'");
  }
  if (used != v.size() || !std::isfinite(x)) throw InputError("config: " + key + ": not a finite number: '" + v + "'");
  return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::exception&) {
    throw InputError("config: " + key + ": not an integer: '" + v + "'");
  }
  if (used != v.size()) throw InputError("config: " + key + ": not an integer: '" + v + "'");
  return x;
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
  const auto x = parse_int(key, v);
  if (x < 0) throw InputError("config: " + key + ": must be >= 0");
  return static_cast<std::size_t>(x);
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InputError("config: " + key + ": expected true or false");
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    x = std::stoull(v, &used);
  } catch (const std::exception&) {
    throw InputError("config: " + key + ": not an unsigned integer: '" + v + "'");
  }
  if (used != v.size()) throw InputError("config: " + key + ": not an unsigned integer: '" + v + "'");
  return x;
}

inline std::optional<double> parse_auto_real(const std::string& key, const std::string& v) {
  if (v == "auto") return std::nullopt;
  return parse_real(key, v);
}

inline GridRange parse_range(const std::string& key, const std::string& v) {
  const auto parts = split(v, ',');
  if (parts.size() != 3) throw InputError("config: " + key + ": expected lo,hi,count");
  GridRange r{parse_real(key, parts[0]), parse_real(key, parts[1]), parse_count(key, parts[2])};
  if (!(r.lo > 0.0) || !(r.hi >= r.lo) || r.count < 1) throw InputError("config: " + key + ": need 0 < lo <= hi, count >= 1");
  return r;
}

inline std::vector<ForcingMode> parse_forcing_modes(const std::string& key, const std::string& v) {
  std::vector<ForcingMode> modes;
  if (v.empty() || v == "none") return modes;
  for (const auto& item : split(v, ';')) {
    if (item.empty()) continue;
    const auto p = split(item, ',');
    if (p.size() != 5) throw InputError("config: " + key + ": each mode is a,m1,m2,sigma,phi");
    modes.push_back({parse_real(key, p[0]), static_cast<int>(parse_int(key, p[1])), static_cast<int>(parse_int(key, p[2])),
                     parse_real(key, p[3]), parse_real(key, p[4])});
  }
  return modes;
}

inline std::vector<InitialMode> parse_initial_modes(const std::string& key, const std::string& v) {
  std::vector<InitialMode> modes;
  if (v.empty() || v == "none") return modes;
  for (const auto& item : split(v, ';')) {
    if (item.empty()) continue;
    const auto p = split(item, ',');
    if (p.size() != 4) throw InputError("config: " + key + ": each mode is a,m1,m2,phi");
    modes.push_back({parse_real(key, p[0]), static_cast<int>(parse_int(key, p[1])), static_cast<int>(parse_int(key, p[2])),
                     parse_real(key, p[3])});
  }
  return modes;
}

}  // namespace detail

/// Parses and validates; every failure is an InputError naming the key or constraint.
inline RunConfig parse_config(std::istream& in) {
  RunConfig c;
  bool have_seed = false;
  bool beta_auto = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = detail::trim(std::string_view(body).substr(0, eq));
    const auto val = detail::trim(std::string_view(body).substr(eq + 1));
    if (c.echo.count(key)) throw InputError("config: duplicate key " + key);
    c.echo[key] = val;

    using namespace detail;
    if (key == "seed") {
      c.seed = parse_u64(key, val);
      have_seed = true;
    } else if (key == "geometry.n") c.n = parse_count(key, val);
    else if (key == "geometry.d") c.d = parse_real(key, val);
    else if (key == "modulus.delta") c.modulus.delta = parse_real(key, val);
    else if (key == "modulus.gamma") c.modulus.gamma = parse_real(key, val);
    else if (key == "modulus.beta") {
      beta_auto = val == "auto";
      if (!beta_auto) c.modulus.beta = parse_real(key, val);
    }
    else if (key == "modulus.b") c.b = parse_auto_real(key, val);
    else if (key == "scaling.a") c.a = parse_auto_real(key, val);
    else if (key == "forcing.modes") c.forcing.modes = parse_forcing_modes(key, val);
    else if (key == "initial.modes") c.initial_modes = parse_initial_modes(key, val);
    else if (key == "initial.snapshot") c.initial_snapshot = val;
    else if (key == "sim.cfl_factor") c.sim.cfl_factor = parse_real(key, val);
    else if (key == "sim.t_end") c.sim.t_end = parse_real(key, val);
    else if (key == "output.stride") c.sim.output_stride = parse_count(key, val);
    else if (key == "output.dir") c.output_dir = val;
    else if (key == "sim.dealias") c.sim.dealias = parse_bool(key, val);
    else if (key == "sim.dt_max") c.sim.dt_max = parse_real(key, val);
    else if (key == "monitor.offset_budget") c.offset_budget = parse_count(key, val);
    else if (key == "monitor.full_offsets") c.full_offsets = parse_bool(key, val);
    else if (key == "monitor.event_tol") c.event_tol = parse_real(key, val);
    else if (key == "estimate_b.n") c.estimate_n = parse_count(key, val);
    else if (key == "estimate_b.ensemble") c.estimate_ensemble = parse_count(key, val);
    else if (key == "estimate_b.cutoff") c.estimate_cutoff = static_cast<int>(parse_int(key, val));
    else if (key == "search.delta") c.search_delta = parse_range(key, val);
    else if (key == "search.gamma") c.search_gamma = parse_range(key, val);
    else if (key == "search.a") c.search_a = parse_real(key, val);
    else throw InputError("config: unknown key '" + key + "'");
  }
  if (!have_seed) throw InputError("config: missing required key 'seed'");

  c.forcing.d = c.d;
  if (beta_auto) c.modulus.beta = ModulusParams::beta_from_alpha(holder_constants(c.forcing).alpha);
  c.geometry();  // validates n, d
  c.modulus.validate();
  c.sim.validate();
  c.forcing.validate_on(c.geometry());
  if (c.b && !(*c.b > 0.0)) throw InputError("config: modulus.b must be > 0");
  if (c.a && !(*c.a >= 1.0)) throw InputError("config: scaling.a must be >= 1");
  if (!(c.search_a >= 1.0)) throw InputError("config: search.a must be >= 1");
  if (!(c.event_tol > 0.0)) throw InputError("config: monitor.event_tol must be > 0");
  if (!c.initial_modes.empty() && !c.initial_snapshot.empty())
    throw InputError("config: give initial.modes or initial.snapshot, not both");
  for (const auto& m : c.initial_modes)
    if (std::abs(m.m1) >= static_cast<int>(c.n / 2) || std::abs(m.m2) >= static_cast<int>(c.n / 2))
      throw InputError("config: initial.modes: wavenumber not resolved on the grid (|m| < n/2)");
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open '" + path + "'");
  return parse_config(in);
}

inline RunConfig parse_config_string(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

/// θ₀ from initial.modes or initial.snapshot (zero when neither is given).
inline ScalarField initial_field(const RunConfig& c) {
  const auto g = c.geometry();
  if (!c.initial_snapshot.empty()) {
    auto snap = read_snapshot(c.initial_snapshot);
    if (!(snap.field.geometry() == g)) throw InputError("config: initial.snapshot grid does not match geometry.n/geometry.d");
    return std::move(snap.field);
  }
  const double unit = g.wavenumber_unit();
  const auto modes = c.initial_modes;
  return ScalarField::from_function(g, [&](double x1, double x2) {
    double v = 0.0;
    for (const auto& m : modes) v += m.amplitude * std::sin(unit * (m.m1 * x1 + m.m2 * x2) + m.phase);
    return v;
  });
}

}  // namespace sqg
