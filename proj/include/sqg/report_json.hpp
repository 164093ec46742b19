#pragma once

// JSON encodings of reports. Keys keep insertion order; non-finite numbers are
// written as strings ("inf", "-inf", "nan") so that outputs stay byte-stable.

#include <cmath>
#include <optional>
#include <string>

#include <json.hpp>

#include "sqg/certifier.hpp"
#include "sqg/modulus.hpp"
#include "sqg/monitor.hpp"

namespace sqg {

using Json = nlohmann::ordered_json;

inline Json num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline Json opt_num(const std::optional<double>& x) { return x ? num(*x) : Json(nullptr); }

inline Json to_json(const ModulusParams& p) { return Json{{"delta", num(p.delta)}, {"gamma", num(p.gamma)}, {"beta", num(p.beta)}}; }

inline Json to_json(const ProblemConstants& pc) {
  return Json{{"c1", num(pc.c1)}, {"alpha", num(pc.alpha)}, {"f_sup", num(pc.f_sup)}, {"d_period", num(pc.d_period)}, {"b", num(pc.b)}};
}

inline Json to_json(const ValidityReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks)
    checks.push_back(Json{{"name", c.name}, {"pass", c.pass}, {"witness", opt_num(c.witness)}, {"detail", c.detail}});
  return Json{{"params", to_json(r.params)}, {"all_pass", r.all_pass()}, {"checks", checks}};
}

inline Json to_json(const EstimateTerms& t) {
  return Json{{"zeta", num(t.zeta)},         {"advection", num(t.advection)}, {"dissipation", num(t.dissipation)},
              {"forcing", num(t.forcing)},   {"sharp_sum", num(t.total)},     {"coarse_bound", num(t.coarse)},
              {"quadrature_ok", t.quadrature_ok}};
}

inline Json to_json(const BoundCheck& b) {
  return Json{{"pass", b.pass}, {"worst_margin", num(b.worst_margin)}, {"witness_zeta", opt_num(b.witness_zeta)}};
}

inline Json to_json(const RegimeResult& r) {
  Json j{{"regime", r.regime},
         {"pass", r.pass},
         {"inconclusive", r.inconclusive},
         {"worst_margin", num(r.worst_margin)},
         {"witness_zeta", opt_num(r.witness_zeta)},
         {"witness_terms", r.witness_terms ? to_json(*r.witness_terms) : Json(nullptr)},
         {"coarse", to_json(r.coarse)},
         {"sharp", to_json(r.sharp)},
         {"endpoint_condition", r.endpoint_condition ? Json(*r.endpoint_condition) : Json(nullptr)},
         {"zeta_lo", num(r.zeta_lo)},
         {"zeta_hi", num(r.zeta_hi)},
         {"grid_points", r.grid_points},
         {"diagnosis", r.diagnosis}};
  return j;
}

inline Json to_json(const ChainReport& c) {
  Json checks = Json::array();
  for (const auto& k : c.checks)
    checks.push_back(Json{{"name", k.name},
                          {"pass", k.pass},
                          {"worst_margin", num(k.worst_margin)},
                          {"witness_zeta", opt_num(k.witness_zeta)},
                          {"zeta_lo", num(k.zeta_lo)},
                          {"zeta_hi", num(k.zeta_hi)}});
  return Json{{"all_pass", c.all_pass()}, {"checks", checks}};
}

inline Json to_json(const InitialDataCheck& c) {
  return Json{{"pass", c.pass},
              {"worst_ratio", num(c.worst_ratio)},
              {"witness_offset", c.witness_offset ? Json::array({c.witness_offset->o1, c.witness_offset->o2}) : Json(nullptr)},
              {"witness_zeta", num(c.witness_zeta)},
              {"grad_sup", num(c.grad_sup)}};
}

inline Json to_json(const CertificationReport& r) {
  return Json{{"pass", r.pass()},
              {"a", opt_num(r.a)},
              {"doublings", r.doublings},
              {"diagnosis", r.diagnosis},
              {"params", to_json(r.params)},
              {"constants", to_json(r.constants)},
              {"b_provenance", r.b_provenance},
              {"initial_data", to_json(r.initial_data)},
              {"small_zeta", to_json(r.small_zeta)},
              {"large_zeta", to_json(r.large_zeta)},
              {"chain", to_json(r.chain)}};
}

inline Json to_json(const BEstimate& e) {
  Json per = Json::array();
  for (double b : e.per_field) per.push_back(num(b));
  return Json{{"b_hat", num(e.b_hat)}, {"n", e.n},     {"ensemble", e.ensemble}, {"cutoff", e.cutoff},
              {"seed", e.seed},        {"skipped", e.skipped}, {"per_field", per}};
}

inline Json to_json(const DeficitReport& d) {
  return Json{{"t", num(d.t)},
              {"deficit", num(d.deficit)},
              {"witness_offset", Json::array({d.witness_offset.o1, d.witness_offset.o2})},
              {"base", Json::array({d.base_j, d.base_k})},
              {"zeta", num(d.zeta)},
              {"smallest_zeta", num(d.smallest_zeta)}};
}

inline Json to_json(const GradientCheck& g) {
  return Json{{"pass", g.pass}, {"at_equality", g.at_equality}, {"grad_sup", num(g.grad_sup)}, {"bound", num(g.bound)}, {"margin", num(g.margin)}};
}

inline Json to_json(const BreakthroughEvent& e) {
  return Json{{"t", num(e.t)},           {"x", Json::array({num(e.x1), num(e.x2)})},
              {"y", Json::array({num(e.y1), num(e.y2)})},
              {"zeta", num(e.zeta)},     {"deficit", num(e.deficit)},
              {"ddt_estimate", num(e.ddt_estimate)}};
}

/// Two-space indented text with a trailing newline.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}  // namespace sqg
