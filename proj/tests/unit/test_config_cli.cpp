#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <sys/wait.h>

#include "sqg/cli.hpp"

using namespace sqg;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string log;
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    root_ = fs::temp_directory_path() / (std::string("sqg_cli_") + info->name());
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  fs::path write_config(const std::string& name, const std::string& text) {
    const auto p = root_ / name;
    std::ofstream(p) << text;
    return p;
  }

  Outcome run(const std::string& args) {
    const auto log = root_ / "stderr.txt";
    const std::string cmd = std::string(SQG_LAB_PATH) + " " + args + " 2> " + log.string() + " > /dev/null";
    const int status = std::system(cmd.c_str());
    Outcome o;
    o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    o.log = ss.str();
    return o;
  }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path root_;
};

const char* kSmallConfig = R"(# small, fast run
seed = 7
geometry.n = 32
modulus.delta = 0.01
modulus.gamma = 0.005
modulus.b = 0.34
forcing.modes = 1e-4,1,1,0,0
initial.modes = 2e-3,1,0,0 ; 1e-3,0,2,0.5
sim.t_end = 0.2
output.stride = 10
)";

}  // namespace

TEST(Config, ParsesKnownKeys) {
  const auto c = parse_config_string(std::string(kSmallConfig) + "scaling.a = 4\nsim.dealias = false\n");
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.n, 32u);
  EXPECT_EQ(c.modulus.delta, 0.01);
  EXPECT_EQ(c.b, 0.34);
  EXPECT_EQ(c.a, 4.0);
  EXPECT_FALSE(c.sim.dealias);
  ASSERT_EQ(c.forcing.modes.size(), 1u);
  ASSERT_EQ(c.initial_modes.size(), 2u);
  EXPECT_EQ(c.initial_modes[1].phase, 0.5);
  EXPECT_EQ(c.echo.at("modulus.b"), "0.34");
  const auto theta = initial_field(c);
  EXPECT_NEAR(sup_norm(theta), 3e-3, 2e-4);
}

TEST(Config, Defaults) {
  const auto c = parse_config_string("seed = 1\n");
  EXPECT_EQ(c.n, 128u);
  EXPECT_EQ(c.modulus, ModulusParams{});
  EXPECT_FALSE(c.b.has_value());
  EXPECT_FALSE(c.a.has_value());
  EXPECT_EQ(sup_norm(initial_field(c)), 0.0);
  EXPECT_EQ(parse_config_string("seed = 1\nmodulus.b = auto\nscaling.a = auto\n").b, std::nullopt);
}

TEST(Config, BetaFromForcingRegularity) {
  const auto c = parse_config_string("seed = 1\nmodulus.beta = auto\nforcing.modes = 0.1,1,0,0,0\n");
  EXPECT_EQ(c.modulus.beta, 0.5);
}

TEST(Config, Errors) {
  EXPECT_THROW(parse_config_string("geometry.n = 32\n"), InputError);
  EXPECT_THROW(parse_config_string("seed = 1\nbogus = 3\n"), InputError);
  EXPECT_THROW(parse_config_string("seed = 1\nseed = 2\n"), InputError);
  EXPECT_THROW(parse_config_string("seed = 1\ngeometry.n\n"), InputError);
  EXPECT_THROW(parse_config_string("seed = 1\ngeometry.n = 3x\n"), InputError);
  EXPECT_THROW(parse_config_string("seed = 1\nscaling.a = 0.5\n"), InputError);
  EXPECT_THROW(parse_config_string("seed = 1\ngeometry.n = 16\ninitial.modes = 1,8,0,0\n"), InputError);
  EXPECT_THROW(parse_config_string("seed = 1\nsim.t_end = -1\n"), InputError);
  try {
    parse_config_string("seed = 1\nmodulus.delta = 0.1\nmodulus.gamma = 0.06\n");
    FAIL() << "expected InputError";
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("gamma <= delta/2"), std::string::npos);
  }
}

TEST_F(CliTest, ValidateModulusDefaults) {
  const auto cfg = write_config("c.cfg", "seed = 1\n");
  const auto out = root_ / "out";
  EXPECT_EQ(run("validate-modulus --config " + cfg.string() + " --out " + out.string()).code, 0);
  const auto j = nlohmann::json::parse(slurp(out / "modulus_validation.json"));
  EXPECT_TRUE(j["all_pass"].get<bool>());
  for (const auto& c : j["checks"]) EXPECT_TRUE(c["pass"].get<bool>()) << c["name"];
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.jsonl"));
  EXPECT_EQ(manifest["command"], "validate-modulus");
  EXPECT_EQ(manifest["exit_code"], 0);
  EXPECT_EQ(manifest["seed"], 1);
}

TEST_F(CliTest, GammaAboveHalfDeltaIsConfigError) {
  const auto cfg = write_config("c.cfg", "seed = 1\nmodulus.delta = 0.1\nmodulus.gamma = 0.07\n");
  const auto o = run("simulate --config " + cfg.string() + " --out " + (root_ / "out").string());
  EXPECT_EQ(o.code, 2);
  EXPECT_NE(o.log.find("gamma <= delta/2"), std::string::npos) << o.log;
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run("simulate").code, 2);
  EXPECT_EQ(run("frobnicate --config x").code, 2);
  EXPECT_EQ(run("certify --config " + (root_ / "missing.cfg").string()).code, 2);
  const auto cfg = write_config("c.cfg", kSmallConfig);
  EXPECT_EQ(run("certify --config " + cfg.string() + " --a 0.5 --out " + (root_ / "o").string()).code, 2);
}

TEST_F(CliTest, ZeroEndTimeWritesOneRow) {
  const auto cfg = write_config("c.cfg", std::string(kSmallConfig) + "scaling.a = 4\n");
  const auto out = root_ / "out";
  // sim.t_end is overridden by a second config rather than a flag.
  std::string text = slurp(cfg);
  text.replace(text.find("sim.t_end = 0.2"), 15, "sim.t_end = 0");
  const auto cfg0 = write_config("c0.cfg", text);
  EXPECT_EQ(run("simulate --config " + cfg0.string() + " --out " + out.string()).code, 0);
  const auto csv = slurp(out / "trajectory.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  EXPECT_TRUE(fs::exists(out / "snapshots" / "snap_000000.bin"));
  EXPECT_TRUE(fs::exists(out / "events.jsonl"));
  EXPECT_TRUE(fs::exists(out / "monitor.json"));
}

TEST_F(CliTest, KnownGoodSimulation) {
  const auto cfg = write_config("c.cfg", R"(seed = 3
geometry.n = 64
modulus.delta = 0.1
modulus.gamma = 0.05
scaling.a = 8
forcing.modes = 1e-3,1,1,0,0
initial.modes = 0.05,1,0,0
sim.t_end = 0.5
output.stride = 5
)");
  const auto out = root_ / "out";
  EXPECT_EQ(run("simulate --config " + cfg.string() + " --out " + out.string()).code, 0);
  std::ifstream csv(out / "trajectory.csv");
  std::string line;
  std::getline(csv, line);
  std::size_t rows = 0;
  while (std::getline(csv, line)) {
    std::istringstream ls(line);
    std::string t, sup;
    std::getline(ls, t, ',');
    std::getline(ls, sup, ',');
    // Maximum principle with forcing: sup θ(t) ≤ sup θ₀ + t‖f‖.
    EXPECT_LE(std::stod(sup), 0.05 + std::stod(t) * 1e-3 + 1e-9) << line;
    ++rows;
  }
  EXPECT_GE(rows, 2u);
  const auto mon = nlohmann::json::parse(slurp(out / "monitor.json"));
  EXPECT_TRUE(mon["gradient_bound_held"].get<bool>());
  EXPECT_TRUE(mon["completed"].get<bool>());
}

TEST_F(CliTest, CertifyHugeBFails) {
  const auto cfg = write_config("c.cfg", "seed = 1\ngeometry.n = 32\nmodulus.b = 1e6\n");
  const auto out = root_ / "out";
  EXPECT_EQ(run("certify --config " + cfg.string() + " --out " + out.string()).code, 1);
  const auto j = nlohmann::json::parse(slurp(out / "certification.json"));
  EXPECT_FALSE(j["pass"].get<bool>());
  EXPECT_TRUE(j["a"].is_null());
  EXPECT_FALSE(j["large_zeta"]["pass"].get<bool>());
  EXPECT_TRUE(j["large_zeta"]["witness_zeta"].is_number());
  EXPECT_TRUE(j["large_zeta"]["witness_terms"].is_object());
  EXPECT_EQ(j["b_provenance"], "config");
}

TEST_F(CliTest, SearchParamsGrid) {
  const auto cfg = write_config("c.cfg", "seed = 1\ngeometry.n = 32\nmodulus.b = 0.34\n");
  const auto out = root_ / "out";
  const int code = run("search-params --config " + cfg.string() + " --out " + out.string()).code;
  EXPECT_TRUE(code == 0 || code == 1);
  std::ifstream csv(out / "feasibility.csv");
  std::string line;
  std::getline(csv, line);
  EXPECT_EQ(line, "delta,gamma,pass,worst_margin");
  std::size_t rows = 0, invalid = 0, expected_invalid = 0;
  while (std::getline(csv, line)) {
    ++rows;
    std::istringstream ls(line);
    std::string d, g, pass;
    std::getline(ls, d, ',');
    std::getline(ls, g, ',');
    std::getline(ls, pass, ',');
    const double delta = std::stod(d), gamma = std::stod(g);
    expected_invalid += gamma > delta / 2;
    invalid += pass == "invalid";
    if (gamma > delta / 2) {
      EXPECT_EQ(pass, "invalid") << line;
    }
  }
  EXPECT_EQ(rows, 100u);
  EXPECT_GT(invalid, 0u);
  EXPECT_GE(invalid, expected_invalid);
  EXPECT_EQ(code, 0);
}

TEST_F(CliTest, RepeatedRunsAreByteIdentical) {
  const auto cfg = write_config("c.cfg", std::string(kSmallConfig) + "estimate_b.n = 32\nestimate_b.ensemble = 4\n");
  std::string cfg_auto = slurp(cfg);
  cfg_auto.replace(cfg_auto.find("modulus.b = 0.34"), 16, "modulus.b = auto");
  const auto cfg_b = write_config("b.cfg", cfg_auto);
  const auto a = root_ / "a", b = root_ / "b";
  for (const auto& out : {a, b}) {
    EXPECT_EQ(run("certify --config " + cfg.string() + " --out " + out.string()).code, 0);
    EXPECT_EQ(run("estimate-b --config " + cfg_b.string() + " --out " + out.string()).code, 0);
    EXPECT_EQ(run("simulate --config " + cfg.string() + " --out " + out.string()).code, 0);
  }
  for (const char* name : {"certification.json", "b_estimate.json", "trajectory.csv", "monitor.json", "events.jsonl",
                           "snapshots/snap_000000.bin"})
    EXPECT_EQ(slurp(a / name), slurp(b / name)) << name;
  // One manifest per directory, one line per command.
  const auto manifest = slurp(a / "manifest.jsonl");
  EXPECT_EQ(std::count(manifest.begin(), manifest.end(), '\n'), 3);
  // --seed changes the estimate.
  const auto c = root_ / "c";
  EXPECT_EQ(run("estimate-b --config " + cfg_b.string() + " --seed 8 --out " + c.string()).code, 0);
  EXPECT_NE(slurp(a / "b_estimate.json"), slurp(c / "b_estimate.json"));
}

TEST(Dispatch, InProcessExitCodes) {
  const auto dir = fs::temp_directory_path() / "sqg_dispatch";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "c.cfg") << "seed = 1\n";
  std::ostringstream log;
  CliOptions opt;
  opt.out = dir / "out";
  EXPECT_EQ(dispatch("validate-modulus", (dir / "c.cfg").string(), opt, log), kExitPass);
  EXPECT_EQ(dispatch("nope", (dir / "c.cfg").string(), opt, log), kExitConfig);
  fs::remove_all(dir);
}
