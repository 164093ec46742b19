#include <CLI11.hpp>

#include "sqg/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Critical SQG simulator, modulus certifier and monitor"};
  app.require_subcommand(1);

  std::string config;
  sqg::CliOptions opt;
  std::string out;
  std::uint64_t seed = 0;
  double a = 0.0;

  for (const char* name : {"simulate", "certify", "search-params", "estimate-b", "validate-modulus"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "configuration file")->required();
    sub->add_option("--out", out, "output directory");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_flag("--full-offsets", opt.full_offsets, "monitor: evaluate every offset");
    sub->add_option("--a", a, "fixed scaling A (skips the search)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sqg::kExitConfig;
  }

  const auto* sub = app.get_subcommands().front();
  if (sub->count("--out")) opt.out = out;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--a")) opt.a = a;
  return sqg::dispatch(sub->get_name(), config, opt);
}
