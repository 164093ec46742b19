#pragma once

// Subcommand drivers. Exit codes: 0 pass, 1 certified fail, 2 configuration
// error, 3 numerical failure. Every command appends one line to
// <out>/manifest.jsonl.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sqg/certifier.hpp"
#include "sqg/config.hpp"
#include "sqg/dynamics.hpp"
#include "sqg/field_io.hpp"
#include "sqg/modulus.hpp"
#include "sqg/monitor.hpp"
#include "sqg/report_json.hpp"

namespace sqg {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitPass = 0, kExitFail = 1, kExitConfig = 2, kExitNumerical = 3 };

struct CliOptions {
  std::optional<std::filesystem::path> out;  // overrides output.dir
  std::optional<std::uint64_t> seed;
  bool full_offsets = false;
  std::optional<double> a;
};

namespace detail {

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&tt, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << text;
}

class RunContext {
 public:
  RunContext(std::string command, const RunConfig& config, const CliOptions& opt)
      : command_(std::move(command)),
        config_(config),
        dir_(opt.out ? *opt.out : std::filesystem::path(config.output_dir.empty() ? "out" : config.output_dir)),
        started_(utc_now()) {
    std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& dir() const { return dir_; }

  std::filesystem::path output(const std::string& name) {
    outputs_.push_back(name);
    return dir_ / name;
  }

  int finish(int code, bool pass) {
    Json cfg = Json::object();
    for (const auto& [k, v] : config_.echo) cfg[k] = v;
    Json outs = Json::array();
    for (const auto& o : outputs_) outs.push_back(o);
    const Json line{{"command", command_}, {"version", kVersion},   {"seed", config_.seed},
                    {"config", cfg},       {"started", started_},   {"finished", utc_now()},
                    {"outputs", outs},     {"pass", pass},          {"exit_code", code}};
    std::ofstream os(dir_ / "manifest.jsonl", std::ios::app);
    os << line.dump() << '\n';
    return code;
  }

 private:
  std::string command_;
  const RunConfig& config_;
  std::filesystem::path dir_;
  std::string started_;
  std::vector<std::string> outputs_;
};

inline RunConfig with_overrides(RunConfig c, const CliOptions& opt) {
  if (opt.seed) c.seed = *opt.seed;
  if (opt.full_offsets) c.full_offsets = true;
  if (opt.a) {
    if (!(*opt.a >= 1.0)) throw InputError("--a must be >= 1");
    c.a = *opt.a;
  }
  return c;
}

inline std::pair<double, std::string> resolve_b(const RunConfig& c) {
  if (c.b) return {*c.b, "config"};
  const auto est = estimate_b(TorusGeometry::make(c.estimate_n, c.d), c.estimate_ensemble, c.seed, c.estimate_cutoff);
  std::ostringstream os;
  os << "estimate_b(n=" << c.estimate_n << ", ensemble=" << c.estimate_ensemble << ", cutoff=" << c.estimate_cutoff
     << ", seed=" << c.seed << ")";
  return {est.b_hat, os.str()};
}

inline CertificationReport certification(const RunConfig& c, const ScalarField& theta0) {
  const KnvModulus m(c.modulus);
  const auto [b, provenance] = resolve_b(c);
  const auto pc = ProblemConstants::from_forcing(c.forcing, b);
  const MonitorHandle handle{c.offset_budget, c.full_offsets};
  auto rep = c.a ? certify_at(theta0, pc, m, *c.a, handle) : choose_a(theta0, pc, m, handle);
  rep.b_provenance = provenance;
  return rep;
}

}  // namespace detail

inline int cmd_validate_modulus(const RunConfig& config, const CliOptions& opt, std::ostream& log = std::cerr) {
  const auto c = detail::with_overrides(config, opt);
  detail::RunContext ctx("validate-modulus", c, opt);
  const auto rep = validate(KnvModulus(c.modulus));
  detail::write_text(ctx.output("modulus_validation.json"), dump(to_json(rep)));
  for (const auto& ch : rep.checks)
    if (!ch.pass) log << "check failed: " << ch.name << " (" << ch.detail << ")\n";
  const bool pass = rep.all_pass();
  return ctx.finish(pass ? kExitPass : kExitFail, pass);
}

inline int cmd_estimate_b(const RunConfig& config, const CliOptions& opt, std::ostream& log = std::cerr) {
  const auto c = detail::with_overrides(config, opt);
  detail::RunContext ctx("estimate-b", c, opt);
  const auto est = estimate_b(TorusGeometry::make(c.estimate_n, c.d), c.estimate_ensemble, c.seed, c.estimate_cutoff);
  detail::write_text(ctx.output("b_estimate.json"), dump(to_json(est)));
  log << "B_hat = " << std::setprecision(17) << est.b_hat << '\n';
  return ctx.finish(kExitPass, true);
}

inline int cmd_certify(const RunConfig& config, const CliOptions& opt, std::ostream& log = std::cerr) {
  const auto c = detail::with_overrides(config, opt);
  detail::RunContext ctx("certify", c, opt);
  const auto rep = detail::certification(c, initial_field(c));
  detail::write_text(ctx.output("certification.json"), dump(to_json(rep)));
  log << rep.diagnosis << '\n';
  const bool pass = rep.pass();
  return ctx.finish(pass ? kExitPass : kExitFail, pass);
}

inline int cmd_search_params(const RunConfig& config, const CliOptions& opt, std::ostream& log = std::cerr) {
  const auto c = detail::with_overrides(config, opt);
  detail::RunContext ctx("search-params", c, opt);
  const double a = c.a.value_or(c.search_a);
  const auto [b, provenance] = detail::resolve_b(c);
  const auto pc = ProblemConstants::from_forcing(c.forcing, b);
  const auto deltas = log_grid(c.search_delta.lo, c.search_delta.hi, c.search_delta.count);
  const auto gammas = log_grid(c.search_gamma.lo, c.search_gamma.hi, c.search_gamma.count);

  std::ostringstream csv;
  csv << std::setprecision(17) << "delta,gamma,pass,worst_margin\n";
  std::size_t feasible = 0;
  for (double delta : deltas)
    for (double gamma : gammas) {
      ModulusParams p{delta, gamma, c.modulus.beta};
      csv << delta << ',' << gamma << ',';
      try {
        p.validate();
      } catch (const InputError&) {
        csv << "invalid,nan\n";
        continue;
      }
      const KnvModulus m(p);
      const auto small = certify_small_zeta(m, pc, a);
      const auto large = certify_large_zeta(m, pc, a);
      const bool pass = small.pass && large.pass;
      feasible += pass;
      csv << (pass ? "true" : "false") << ',' << std::max(small.worst_margin, large.worst_margin) << '\n';
    }
  detail::write_text(ctx.output("feasibility.csv"), csv.str());
  log << feasible << " feasible (delta, gamma) points at A = " << a << ", B = " << b << " (" << provenance << ")\n";
  return ctx.finish(feasible > 0 ? kExitPass : kExitFail, feasible > 0);
}

inline int cmd_simulate(const RunConfig& config, const CliOptions& opt, std::ostream& log = std::cerr) {
  const auto c = detail::with_overrides(config, opt);
  detail::RunContext ctx("simulate", c, opt);
  const auto theta0 = initial_field(c);
  const KnvModulus m(c.modulus);

  double a = 0.0;
  if (c.a) {
    a = *c.a;
  } else {
    const auto rep = detail::certification(c, theta0);
    detail::write_text(ctx.output("certification.json"), dump(to_json(rep)));
    if (!rep.a) {
      log << "no admissible A: " << rep.diagnosis << '\n';
      return ctx.finish(kExitFail, false);
    }
    a = *rep.a;
  }

  const ScaledModulus s(m, a);
  const std::size_t budget = c.offset_budget ? c.offset_budget : default_offset_budget(c.n);
  TrajectoryMonitor monitor(s, Forcing(c.forcing), budget, c.full_offsets, c.event_tol, c.sim.dealias);
  auto hooks = monitor.hooks();
  std::filesystem::create_directories(ctx.dir() / "snapshots");
  std::size_t index = 0;
  std::vector<std::string> snapshot_names;
  hooks.on_sample = [&](const SimState& st, const Sample&) {
    std::ostringstream name;
    name << "snapshots/snap_" << std::setw(6) << std::setfill('0') << index++ << ".bin";
    write_snapshot(ctx.output(name.str()), st.theta, st.t);
  };

  const auto traj = run(theta0, Forcing(c.forcing), c.sim, hooks);

  {
    std::ofstream csv(ctx.output("trajectory.csv"), std::ios::binary | std::ios::trunc);
    write_trajectory_csv(csv, traj.samples);
  }
  std::string events;
  for (const auto& e : monitor.events()) events += to_json(e).dump() + '\n';
  detail::write_text(ctx.output("events.jsonl"), events);
  Json deficits = Json::array();
  for (const auto& d : monitor.deficits()) deficits.push_back(to_json(d));
  Json grads = Json::array();
  for (const auto& g : monitor.gradient_checks()) grads.push_back(to_json(g));
  const Json mon{{"a", num(a)},
                 {"params", to_json(c.modulus)},
                 {"completed", traj.completed},
                 {"steps", traj.steps},
                 {"gradient_bound_held", monitor.gradient_bound_held()},
                 {"modulus_preserved", monitor.modulus_preserved()},
                 {"deficits", deficits},
                 {"gradient_checks", grads}};
  detail::write_text(ctx.output("monitor.json"), dump(mon));

  if (!traj.completed) {
    const auto last = ctx.output("snapshots/last_finite.bin");
    write_snapshot(last, traj.final_state.theta, traj.final_state.t);
    log << "numerical failure: " << traj.failure << "; last finite state in " << last.string() << '\n';
    return ctx.finish(kExitNumerical, false);
  }
  const bool pass = monitor.gradient_bound_held();
  if (!pass) log << "gradient bound violated at some sample\n";
  return ctx.finish(pass ? kExitPass : kExitFail, pass);
}

/// Loads the config and dispatches; maps exceptions to exit codes.
inline int dispatch(const std::string& command, const std::string& config_path, const CliOptions& opt,
                    std::ostream& log = std::cerr) {
  RunConfig config;
  try {
    config = load_config(config_path);
  } catch (const InputError& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StructuralError& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  try {
    if (command == "simulate") return cmd_simulate(config, opt, log);
    if (command == "certify") return cmd_certify(config, opt, log);
    if (command == "search-params") return cmd_search_params(config, opt, log);
    if (command == "estimate-b") return cmd_estimate_b(config, opt, log);
    if (command == "validate-modulus") return cmd_validate_modulus(config, opt, log);
    log << "error: unknown command " << command << '\n';
    return kExitConfig;
  } catch (const InputError& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const StructuralError& e) {
    log << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    log << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace sqg
