#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>

#include <sys/wait.h>

#include "calibration_report.hpp"
#include "commands.hpp"
#include "run_config.hpp"

namespace cmt::cli {
namespace {

namespace fs = std::filesystem;

const std::string kMinimal = R"([run]
version = 1
seed = 5
)";

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_run_config(in, fs::temp_directory_path());
}

void expect_config_error(const std::string& text, const std::string& fragment) {
  try {
    parse(text);
    FAIL() << "expected a config error mentioning '" << fragment << "'";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(RunConfig, MinimalConfigTakesDefaults) {
  const RunConfig cfg = parse(kMinimal);
  EXPECT_EQ(cfg.seed, 5u);
  EXPECT_EQ(cfg.design.max_len, 50);
  EXPECT_EQ(cfg.design.min_stage, 5);
  EXPECT_DOUBLE_EQ(cfg.hyps.theta_plus, -1.07);
  EXPECT_FALSE(cfg.hyps.has_implied());
  EXPECT_FALSE(cfg.pool.path.has_value());
  EXPECT_EQ(cfg.pool.size, 1136u);
  EXPECT_EQ(cfg.pool.seed, 5u);
  EXPECT_TRUE(cfg.rules.empty());
  EXPECT_EQ(cfg.method, CalibrationMethod::MonteCarlo);
}

TEST(RunConfig, RuleDefaultsFollowTheirKind) {
  const RunConfig cfg = parse(kMinimal + R"(
[simulate]
rules = fixed, tsprt, modtsprt, modhp
[rule.fixed]
[rule.tsprt]
[rule.modtsprt]
C = 1.4
[rule.modhp]
A = 3.7
)");
  ASSERT_EQ(cfg.rules.size(), 4u);
  using Src = ThresholdSpec::Source;
  EXPECT_EQ(cfg.rules[0].kind, RuleKind::Fixed);
  EXPECT_EQ(cfg.rules[0].C.source, Src::Calibrated);
  EXPECT_EQ(cfg.rules[1].A.source, Src::Wald);
  EXPECT_EQ(cfg.rules[1].C.source, Src::Truncation);
  EXPECT_EQ(cfg.rules[2].C.source, Src::Number);
  EXPECT_DOUBLE_EQ(cfg.rules[2].C.value, 1.4);
  EXPECT_EQ(cfg.rules[3].A.source, Src::Number);
  EXPECT_EQ(cfg.rules[3].B.source, Src::Calibrated);
}

TEST(RunConfig, RhoSetsMinimumStage) {
  const RunConfig cfg = parse(kMinimal + "[test]\nmax_len = 30\nrho = 0.25\n");
  EXPECT_EQ(cfg.design.min_stage, 8);
}

TEST(RunConfig, ConstraintsAndGridParse) {
  const RunConfig cfg = parse(kMinimal + R"(
[constraints]
proportions = 0.4, 0.3, 0.3
exposure_cap = 0.25
[simulate]
theta_grid = -2, -1.5, -1
)");
  ASSERT_TRUE(cfg.constraints.has_value());
  EXPECT_EQ(cfg.constraints->proportions.size(), 3u);
  EXPECT_DOUBLE_EQ(cfg.constraints->exposure_cap, 0.25);
  EXPECT_EQ(cfg.theta_grid, (std::vector<double>{-2.0, -1.5, -1.0}));
}

TEST(RunConfig, RejectsInvalidInput) {
  expect_config_error("[run]\nversion = 1\n", "run.seed");
  expect_config_error("[run]\nversion = 2\nseed = 1\n", "version 2");
  expect_config_error("[run]\nseed = 1\n", "run.version");
  expect_config_error(kMinimal + "[test]\nmax_len = 50\nmaxlen = 3\n", "maxlen");
  expect_config_error(kMinimal + "[tests]\n", "[tests]");
  expect_config_error(kMinimal + "[pool]\npath = does-not-exist.csv\n", "does-not-exist.csv");
  expect_config_error(kMinimal + "[hypotheses]\nalpha = 0.05x\n", "hypotheses.alpha");
  expect_config_error(kMinimal + "[hypotheses]\ntheta_minus = 0\n", "theta_minus");
  expect_config_error(kMinimal + "[constraints]\nproportions = 0.5, 0.2\n", "sum to 1");
  expect_config_error(kMinimal + "[simulate]\nrules = missing\n", "[rule.missing]");
  expect_config_error(kMinimal + "[rule.x]\nkind = wald\n", "unknown rule kind");
  expect_config_error(kMinimal + "[calibration]\nmethod = exact\n", "calibration.method");
}

TEST(RunConfig, MissingFileIsReported) {
  EXPECT_THROW(load_run_config("/nonexistent/config.ini"), ConfigError);
}

TEST(BuildRules, ResolvesWaldTruncationAndNumbers) {
  RunConfig cfg = parse(kMinimal + R"(
[pool]
size = 100
[hypotheses]
theta_implied = -2
[simulate]
rules = t, m, f, h
[rule.t]
kind = tsprt
alpha = 0.01
beta = 0.02
[rule.m]
kind = modtsprt
C = 1.4
[rule.f]
kind = fixed
C = 1.28
[rule.h]
kind = modhp
A = 3.7
B = 3.3
C = 1.4
)");
  const ItemPool pool = load_pool(cfg);
  const auto configs = build_rules(cfg, pool);
  ASSERT_EQ(configs.size(), 4u);
  EXPECT_DOUBLE_EQ(configs[0].thresholds.A, std::log(0.99 / 0.02));
  EXPECT_DOUBLE_EQ(configs[0].thresholds.B, std::log(0.98 / 0.01));
  EXPECT_DOUBLE_EQ(configs[0].thresholds.C, (configs[0].thresholds.A - configs[0].thresholds.B) / 2.0);
  EXPECT_DOUBLE_EQ(configs[1].thresholds.A, std::log(19.0));
  EXPECT_DOUBLE_EQ(configs[1].thresholds.C, 1.4);
  EXPECT_DOUBLE_EQ(configs[2].thresholds.C, 1.28);
  EXPECT_EQ(configs[3].rule, RuleKind::ModHP);
  EXPECT_DOUBLE_EQ(configs[3].hyps.theta_implied, -2.0);
  EXPECT_EQ(configs[3].name(), "h");
}

TEST(BuildRules, CalibratedThresholdsNeedAReport) {
  RunConfig cfg = parse(kMinimal + "[pool]\nsize = 100\n[calibration]\nreport = no-such-report.txt\n[rule.modhp]\n");
  const ItemPool pool = load_pool(cfg);
  try {
    build_rules(cfg, pool);
    FAIL() << "expected an error";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("run the calibrate command"), std::string::npos);
  }
}

TEST(CalibrationReport, RoundTripsThresholdsExactly) {
  CalibrationReport r;
  r.method = "monte_carlo";
  r.seed = 9;
  r.replications = 10000;
  r.hyps.theta_implied = -1.9078906250000003;
  r.max_len = 50;
  r.min_stage = 5;
  r.epsilon = 0.5;
  r.pool = "synthetic size 1136 seed 1136 categories 0";
  r.A = 3.5;
  r.B = 0.1 + 0.2;
  r.C = 1.0 / 3.0;
  r.modtsprt_C = 1.3125;
  r.achieved.push_back({"early_accept", {0.025, 0.0016}});
  r.traces.push_back({"A", {{2.0, 0.1}, {5.0, 0.01}}});
  const fs::path path = fs::temp_directory_path() / "cmt_report_roundtrip.txt";
  write_calibration_report(path, r);
  const CalibrationReport back = read_calibration_report(path);
  fs::remove(path);
  EXPECT_EQ(back.hyps.theta_implied, r.hyps.theta_implied);
  EXPECT_EQ(back.A, r.A);
  EXPECT_EQ(back.B, r.B);
  EXPECT_EQ(back.C, r.C);
  EXPECT_FALSE(back.fixed_C.has_value());
  EXPECT_EQ(back.modtsprt_C, r.modtsprt_C);
  EXPECT_EQ(back.pool, r.pool);
  EXPECT_EQ(back.min_stage, 5);
}

// ---------------------------------------------------------------------------
// The executable

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cmt_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args) const {
    const fs::path out = dir_ / "stdout.txt";
    const fs::path err = dir_ / "stderr.txt";
    const std::string command = std::string("\"") + CMT_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                                err.string() + "\"";
    const int status = std::system(command.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  fs::path dir_;
};

TEST_F(CliTest, PoolGenerateThenValidate) {
  const auto gen = run("pool generate --size 1136 --seed 7 --out \"" + (dir_ / "pool.csv").string() + "\"");
  ASSERT_EQ(gen.exit_code, 0) << gen.err;
  const ItemPool pool = read_pool_csv((dir_ / "pool.csv").string());
  EXPECT_EQ(pool.size(), 1136u);
  const auto val = run("pool validate \"" + (dir_ / "pool.csv").string() + "\"");
  EXPECT_EQ(val.exit_code, 0) << val.err;
  EXPECT_NE(val.out.find("items 1136"), std::string::npos);
  EXPECT_TRUE(val.err.empty());
}

TEST_F(CliTest, DuplicateIdFailsAndNamesTheId) {
  const fs::path pool = write("dup.csv", "id,a,b,c,category\n1,1.0,0.0,0.2,0\n42,1.0,0.5,0.2,0\n42,1.2,0.1,0.2,0\n");
  const auto r = run("pool validate \"" + pool.string() + "\"");
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("42"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("line 4"), std::string::npos) << r.err;
  EXPECT_TRUE(r.out.empty());
}

TEST_F(CliTest, MissingConfigFails) {
  const auto r = run("calibrate --config \"" + (dir_ / "absent.ini").string() + "\"");
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("absent.ini"), std::string::npos);
  EXPECT_NE(run("simulate").exit_code, 0);
}

TEST_F(CliTest, ClosedFormThresholdsAreSymmetric) {
  const fs::path config = write("cf.ini", R"([run]
version = 1
seed = 3
[pool]
size = 200
[hypotheses]
alpha = 0.05
beta = 0.05
theta_implied = -2
[test]
max_len = 50
min_stage = 5
[calibration]
method = closed_form
epsilon = 0.5
comparators = false
report = cf.txt
)");
  const auto r = run("calibrate --config \"" + config.string() + "\"");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const CalibrationReport report = read_calibration_report(dir_ / "cf.txt");
  EXPECT_EQ(report.A, report.B);
  EXPECT_GT(report.C, 0.0);
  EXPECT_NE(r.out.find("A " + cmt::detail::format_double(report.A)), std::string::npos);
}

TEST_F(CliTest, RunsAreByteIdenticalAcrossWorkerCounts) {
  const fs::path config = fs::path(CMT_CONFIG_DIR) / "smoke.ini";
  auto outputs = [&](unsigned workers) {
    const std::string tag = std::to_string(workers);
    const fs::path report = dir_ / ("cal" + tag + ".txt");
    const fs::path csv = dir_ / ("oc" + tag + ".csv");
    const auto cal = run("calibrate --config \"" + config.string() + "\" --workers " + tag + " --out \"" +
                         report.string() + "\"");
    EXPECT_EQ(cal.exit_code, 0) << cal.err;
    // simulate reads the report named in the config, so point a copy at it
    std::string text = slurp(config);
    text.replace(text.find("report = smoke_calibration.txt"), 30, "report = " + report.string());
    text.replace(text.find("output = smoke_oc.csv"), 21, "output = " + csv.string());
    const fs::path local = write("smoke" + tag + ".ini", text);
    const auto sim = run("simulate --config \"" + local.string() + "\" --workers " + tag);
    EXPECT_EQ(sim.exit_code, 0) << sim.err;
    return std::tuple{cal.out, slurp(report), sim.out, slurp(csv)};
  };
  const auto one = outputs(1);
  const auto two = outputs(2);
  EXPECT_EQ(std::get<0>(one), std::get<0>(two));
  EXPECT_EQ(std::get<1>(one), std::get<1>(two));
  EXPECT_EQ(std::get<2>(one), std::get<2>(two));
  EXPECT_EQ(std::get<3>(one), std::get<3>(two));
  EXPECT_FALSE(std::get<3>(one).empty());
}

TEST_F(CliTest, SeedFlagChangesResults) {
  const fs::path config = write("seeded.ini", R"([run]
version = 1
seed = 1
output = oc.csv
[pool]
size = 200
[test]
max_len = 10
min_stage = 1
[simulate]
replications = 50
theta_grid = -1.07
[rule.tsprt]
)");
  ASSERT_EQ(run("simulate --config \"" + config.string() + "\"").exit_code, 0);
  const std::string first = slurp(dir_ / "oc.csv");
  ASSERT_EQ(run("simulate --config \"" + config.string() + "\"").exit_code, 0);
  EXPECT_EQ(slurp(dir_ / "oc.csv"), first);
  ASSERT_EQ(run("simulate --config \"" + config.string() + "\" --seed 2").exit_code, 0);
  EXPECT_NE(slurp(dir_ / "oc.csv"), first);
}

}  // namespace
}  // namespace cmt::cli
