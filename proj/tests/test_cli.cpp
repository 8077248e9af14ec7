#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "alset/cli/commands.hpp"

using namespace alset;
using namespace alset::cli;
namespace fs = std::filesystem;

namespace
{

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text)
{
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    out.push_back(line);
  return out;
}

class CliTest : public ::testing::Test
{
protected:
  void SetUp() override
  {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("alset_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  void TearDown() override { fs::remove_all(dir_); }

  fs::path write_config(const std::string& name, const json& doc)
  {
    const fs::path p = dir_ / name;
    std::ofstream(p) << doc.dump(2);
    return p;
  }

  CommandOptions options(const fs::path& config, const std::string& out)
  {
    CommandOptions o;
    o.config_path = config.string();
    o.out_dir = (dir_ / out).string();
    return o;
  }

  static json canonical() { return load_document(std::string(ALSET_CONFIG_DIR) + "/canonical_1d.json"); }

  static json noisy_bilevel()
  {
    return json::parse(R"({
      "algorithm": "alset_bilevel",
      "problem": {"type": "quadratic_bilevel", "generator": {
        "seed": 3, "dim_upper": 4, "dim_lower": 3, "mu_g": 1.0, "kappa": 2.0, "cross_scale": 0.5,
        "upper_curvature_min": 0.5, "upper_curvature_max": 1.0, "lower_weight_min": 0.5,
        "lower_weight_max": 1.0, "coupling_norm": 0.2, "offset_scale": 1.0,
        "noise_sigma_grad_f": 0.1, "noise_sigma_grad_g": 0.1, "noise_sigma_hess": 0.1}},
      "alset": {"preset": "bilevel_kappa", "stepsize_mode": "schedule", "neumann": {"auto_depth": true}},
      "sweep": [20, 40, 80],
      "seeds": [0, 1]
    })");
  }

  fs::path dir_;
};

int run_binary(const std::string& args)
{
  const std::string cmd = std::string(ALSET_CLI_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

// --- config handling -----------------------------------------------------------

TEST(Override, SetsNestedValuesWithJsonParsing)
{
  json doc = json::object();
  apply_override(doc, "alset.neumann.depth_N=7");
  apply_override(doc, "alset.preset=bilevel_kappa");
  apply_override(doc, "sweep=[1,2,3]");
  apply_override(doc, "alset.neumann.exact_inverse_mode=true");
  EXPECT_EQ(doc["alset"]["neumann"]["depth_N"], 7);
  EXPECT_EQ(doc["alset"]["preset"], "bilevel_kappa");
  EXPECT_EQ(doc["sweep"], json::parse("[1,2,3]"));
  EXPECT_EQ(doc["alset"]["neumann"]["exact_inverse_mode"], true);
}

TEST(Override, RejectsMalformedAssignments)
{
  json doc = json::object();
  EXPECT_THROW(apply_override(doc, "no_equals_sign"), config_error);
  EXPECT_THROW(apply_override(doc, "a..b=1"), config_error);
  doc["a"] = 3;
  EXPECT_THROW(apply_override(doc, "a.b=1"), config_error);
}

TEST_F(CliTest, ParseRejectsInvalidExperiments)
{
  auto bad = canonical();
  bad["sweep"] = json::array();
  EXPECT_THROW(parse_experiment(bad), config_error);

  bad = canonical();
  bad["alset"]["unknown_knob"] = 1;
  EXPECT_THROW(parse_experiment(bad), config_error);

  bad = canonical();
  bad["algorithm"] = "alset_minmax";
  EXPECT_THROW(parse_experiment(bad), config_error);

  bad = canonical();
  bad["alset"]["x0"] = {1.0, 2.0};
  EXPECT_THROW(parse_experiment(bad), config_error);

  bad = canonical();
  bad["problem"]["canned_kappa"] = 2;
  EXPECT_THROW(parse_experiment(bad), config_error);

  bad = canonical();
  bad["problem"]["matrices"]["A"] = json::parse("[[0.0]]");
  EXPECT_THROW(parse_experiment(bad), config_error);

  bad = canonical();
  bad["alset"]["neumann"] = {{"depth_N", 0}};
  EXPECT_THROW(parse_experiment(bad), config_error);

  EXPECT_NO_THROW(parse_experiment(canonical()));
}

// --- run -----------------------------------------------------------------------

TEST_F(CliTest, CanonicalRunMatchesHandComputation)
{
  auto opt = options(write_config("c.json", canonical()), "out");
  ASSERT_EQ(cmd_run(opt), exit_ok);
  const auto rows = lines_of(slurp(dir_ / "out" / "run_K4_seed0.csv"));
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_EQ(rows[0], trajectory_csv_header);
  EXPECT_EQ(rows[1].substr(0, 4), "0,1,");
  EXPECT_EQ(rows[2].substr(0, 7), "1,0.25,");
  EXPECT_EQ(rows[2].substr(rows[2].size() - 4), ",1,2");

  const json summary = json::parse(slurp(dir_ / "out" / "summary.json"));
  EXPECT_EQ(summary["runs"].size(), 1u);
  EXPECT_TRUE(summary.contains("code_version"));
  EXPECT_EQ(summary["config"]["algorithm"], "alset_bilevel");
  EXPECT_EQ(summary["runs"][0]["total_phi_samples"], 8);
}

TEST_F(CliTest, RunOutputIsByteIdenticalAcrossRepeatsAndJobs)
{
  const auto cfg = write_config("n.json", noisy_bilevel());
  auto a = options(cfg, "a");
  auto b = options(cfg, "b");
  b.jobs = 4;
  ASSERT_EQ(cmd_run(a), exit_ok);
  ASSERT_EQ(cmd_run(b), exit_ok);
  for (std::int64_t K : {20, 40, 80})
    for (int seed : {0, 1})
    {
      const auto name = run_file_name(K, static_cast<std::uint64_t>(seed));
      const auto left = slurp(dir_ / "a" / name);
      EXPECT_FALSE(left.empty());
      EXPECT_EQ(left, slurp(dir_ / "b" / name)) << name;
    }
  EXPECT_EQ(slurp(dir_ / "a" / "summary.json"), slurp(dir_ / "b" / "summary.json"));
}

TEST_F(CliTest, OverridesChangeTheRun)
{
  const auto cfg = write_config("c.json", canonical());
  auto opt = options(cfg, "o");
  opt.overrides = {"sweep=[2]", "alset.alpha_fixed=0.25"};
  ASSERT_EQ(cmd_run(opt), exit_ok);
  const auto rows = lines_of(slurp(dir_ / "o" / "run_K2_seed0.csv"));
  ASSERT_EQ(rows.size(), 4u);
  // x1 = 1 - 0.25 * 1
  EXPECT_EQ(rows[2].substr(0, 9), "1,0.5625,");
}

TEST_F(CliTest, ExitCodes)
{
  auto empty = canonical();
  empty["sweep"] = json::array();
  EXPECT_EQ(cmd_run(options(write_config("e.json", empty), "e")), exit_config);

  CommandOptions missing;
  missing.config_path = (dir_ / "does_not_exist.json").string();
  missing.out_dir = (dir_ / "m").string();
  EXPECT_EQ(cmd_run(missing), exit_config);

  auto blowup = canonical();
  blowup["alset"]["alpha_fixed"] = 1e200;
  blowup["alset"]["y0"] = {0.0};
  blowup["sweep"] = {50};
  EXPECT_EQ(cmd_run(options(write_config("b.json", blowup), "b")), exit_numeric);
  EXPECT_TRUE(fs::exists(dir_ / "b" / "run_K50_seed0.csv"));

  auto no_output = canonical();
  no_output.erase("output");
  CommandOptions o;
  o.config_path = write_config("n.json", no_output).string();
  EXPECT_EQ(cmd_run(o), exit_config);
}

// --- rate ----------------------------------------------------------------------

TEST_F(CliTest, RateNeedsThreeDistinctHorizons)
{
  auto doc = noisy_bilevel();
  doc["sweep"] = {20, 40, 40};
  EXPECT_EQ(cmd_rate(options(write_config("r.json", doc), "r")), exit_config);
}

TEST_F(CliTest, RateWritesFits)
{
  auto doc = noisy_bilevel();
  doc["rate"] = {{"metrics", {"grad_F_mean", "lower_err_final"}}, {"slope_min", -10.0}, {"slope_max", 10.0}};
  ::testing::internal::CaptureStdout();
  const int code = cmd_rate(options(write_config("r.json", doc), "r"));
  const std::string out = ::testing::internal::GetCapturedStdout();
  ASSERT_EQ(code, exit_ok);
  EXPECT_NE(out.find("grad_F_mean slope="), std::string::npos);
  const json rate = json::parse(slurp(dir_ / "r" / "rate.json"));
  ASSERT_EQ(rate["fits"].size(), 2u);
  EXPECT_EQ(rate["fits"][0]["points"].size(), 3u);
  EXPECT_EQ(rate["runs"].size(), 6u);
  EXPECT_TRUE(rate["pass"].get<bool>());
}

// --- diag ----------------------------------------------------------------------

TEST_F(CliTest, DiagOnQuadraticInstance)
{
  auto doc = noisy_bilevel();
  doc["sweep"] = {30};
  doc["alset"]["neumann"] = {{"exact_inverse_mode", true}};
  doc["diag"] = {{"bias_curve", {{"depths", {1, 2, 4}}, {"draws", 2000}, {"seed", 1}}},
                 {"lipschitz", {{"pairs", 200}, {"seed", 2}}},
                 {"lyapunov", true}};
  ASSERT_EQ(cmd_diag(options(write_config("d.json", doc), "d")), exit_ok);
  EXPECT_EQ(lines_of(slurp(dir_ / "d" / "bias_curve.csv")).size(), 4u);
  const auto lip = lines_of(slurp(dir_ / "d" / "lipschitz.csv"));
  ASSERT_EQ(lip.size(), 4u);
  for (std::size_t i = 1; i < lip.size(); ++i)
    EXPECT_EQ(lip[i].substr(lip[i].size() - 4), "true");
  EXPECT_EQ(lines_of(slurp(dir_ / "d" / "lyapunov.csv")).size(), 32u);
  const json report = json::parse(slurp(dir_ / "d" / "diag.json"));
  EXPECT_TRUE(report.contains("bias_curve"));
}

TEST_F(CliTest, DiagEpsilonAppOnMdp)
{
  const json doc = json::parse(R"({
    "algorithm": "actor_critic",
    "problem": {"type": "tabular_mdp", "generator": {"seed": 1, "n_states": 4, "n_actions": 2, "gamma": 0.9, "reward_max": 1.0}},
    "actor_critic": {"alpha_scale": 10.0, "beta_scale": 10.0},
    "sweep": [10], "seeds": [0],
    "diag": {"epsilon_app": {"thetas": 5, "scale": 1.0, "seed": 3}}
  })");
  ASSERT_EQ(cmd_diag(options(write_config("m.json", doc), "m")), exit_ok);
  const json report = json::parse(slurp(dir_ / "m" / "diag.json"));
  EXPECT_LE(report["epsilon_app"]["sampled_max_lower_estimate"].get<double>(), 1e-8);
  EXPECT_EQ(lines_of(slurp(dir_ / "m" / "epsilon_app.csv")).size(), 7u);
}

TEST_F(CliTest, DiagRequiresSection)
{
  EXPECT_EQ(cmd_diag(options(write_config("c.json", canonical()), "x")), exit_config);
}

// --- presets -------------------------------------------------------------------

TEST_F(CliTest, PresetTableForKappas)
{
  ::testing::internal::CaptureStdout();
  const int code = cmd_presets(CommandOptions{}, {1.0, 2.0});
  const auto rows = lines_of(::testing::internal::GetCapturedStdout());
  ASSERT_EQ(code, exit_ok);
  EXPECT_EQ(rows.front(), "preset,kappa,T,alpha,eta");
  EXPECT_NE(std::find(rows.begin(), rows.end(), "minmax_kappa,2,2,0.5,1"), rows.end());
  EXPECT_EQ(cmd_presets(CommandOptions{}, {0.5}), exit_config);
}

// --- binary --------------------------------------------------------------------

TEST_F(CliTest, BinaryExitCodes)
{
  const std::string canon = std::string(ALSET_CONFIG_DIR) + "/canonical_1d.json";
  EXPECT_EQ(run_binary("run --config " + canon + " --out " + (dir_ / "bin").string()), 0);
  EXPECT_TRUE(fs::exists(dir_ / "bin" / "run_K4_seed0.csv"));
  EXPECT_EQ(run_binary("run --config " + canon + " --out " + (dir_ / "bin2").string() + " --override sweep=[]"), 1);
  EXPECT_EQ(run_binary("frobnicate"), 1);
  EXPECT_EQ(run_binary("run"), 1);
  EXPECT_EQ(run_binary("presets --kappa 1,2,4"), 0);
}
