#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "pifo/cli/cli.hpp"
#include "pifo/cli/report.hpp"
#include "pifo/errors.hpp"
#include "pifo/pipeline/metrics.hpp"

namespace pifo::cli {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("pifo_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path touch(const std::string& name, const std::string& text = "") {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

std::string usage_message(const std::vector<std::string>& args) {
  try {
    parse_args(args);
  } catch (const UsageError& e) {
    return e.what();
  }
  return {};
}

TEST_F(CliDir, TrainExpertWithAllFlags) {
  const fs::path cfg = touch("c.txt");
  const Command c =
      parse_args({"train-expert", "--env", "point-mass", "--config", cfg.string(), "--out", "runs/e", "--seed", "3"});
  EXPECT_EQ(c.kind, CommandKind::kTrainExpert);
  EXPECT_EQ(c.env, "point-mass");
  EXPECT_EQ(c.config, cfg.string());
  EXPECT_EQ(c.out, "runs/e");
  EXPECT_EQ(c.seed, 3u);
}

TEST(Cli, SeedIsOptional) {
  const Command c = parse_args({"train-expert", "--env", "mountain-car", "--out", "o"});
  EXPECT_FALSE(c.seed.has_value());
}

TEST_F(CliDir, ImitateAndRecordDemos) {
  const fs::path demos = touch("d.demo"), ck = touch("e.pifo");
  const Command i = parse_args({"imitate", "--demos", demos.string(), "--env", "cartpole-balance", "--mode",
                                "vision", "--out", "o", "--expert-checkpoint", ck.string()});
  EXPECT_EQ(i.kind, CommandKind::kImitate);
  EXPECT_EQ(i.mode, "vision");
  EXPECT_EQ(i.expert_checkpoint, ck.string());
  const Command r = parse_args({"record-demos", "--checkpoint", ck.string(), "--env", "cartpole-balance",
                                "--num-trajectories", "10", "--out", "x.demo"});
  EXPECT_EQ(r.kind, CommandKind::kRecordDemos);
  EXPECT_EQ(r.num_trajectories, 10u);
  EXPECT_TRUE(r.deterministic);
  EXPECT_FALSE(parse_args({"record-demos", "--checkpoint", ck.string(), "--env", "cartpole-balance",
                           "--num-trajectories", "1", "--deterministic", "false", "--out", "x"})
                   .deterministic);
}

TEST_F(CliDir, EvaluateAndReport) {
  const fs::path ck = touch("c.pifo");
  const Command e = parse_args({"evaluate", "--checkpoint", ck.string(), "--expert-checkpoint", ck.string(), "--env",
                                "point-mass", "--episodes", "20"});
  EXPECT_EQ(e.kind, CommandKind::kEvaluate);
  EXPECT_EQ(e.episodes, 20u);
  const Command r = parse_args({"report", "--run-dirs", "a,b,c", "--out", "figs"});
  EXPECT_EQ(r.run_dirs, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Cli, ErrorsNameTheOffendingFlag) {
  EXPECT_NE(usage_message({"train-expert", "--out", "o"}).find("--env"), std::string::npos);
  EXPECT_NE(usage_message({"train-expert", "--env", "acrobot", "--out", "o"}).find("acrobot"), std::string::npos);
  const std::string mode = usage_message({"imitate", "--demos", "/", "--env", "point-mass", "--mode", "visual",
                                          "--out", "o", "--expert-checkpoint", "/"});
  EXPECT_FALSE(mode.empty());
  EXPECT_FALSE(usage_message({"fly"}).empty());
  EXPECT_FALSE(usage_message({}).empty());
  EXPECT_NE(usage_message({"train-expert", "--env", "point-mass", "--out", "o", "--seed", "-1"}).find("--seed"),
            std::string::npos);
}

TEST(Cli, MainEntryExitCodes) {
  std::ostringstream out, err;
  const char* bad[] = {"pifo", "train-expert"};
  EXPECT_EQ(main_entry(2, bad, out, err), 2);
  const std::string msg = err.str();
  EXPECT_EQ(std::count(msg.begin(), msg.end(), '\n'), 1);
  const char* help[] = {"pifo", "--help"};
  std::ostringstream hout, herr;
  EXPECT_EQ(main_entry(2, help, hout, herr), 0);
  EXPECT_NE(hout.str().find("train-expert"), std::string::npos);
  std::ostringstream eout, eerr;
  const char* missing[] = {"pifo", "report", "--run-dirs", "/nonexistent/run", "--out", "/tmp/pifo_cli_none"};
  EXPECT_EQ(main_entry(6, missing, eout, eerr), 2);
}

MetricsRow row(std::size_t it, double score) {
  MetricsRow r;
  r.iteration = it;
  r.normalized_score = score;
  return r;
}

TEST(Report, FirstIterationReaching) {
  const std::vector<MetricsRow> rows = {row(1, 0.2), row(2, 0.79), row(3, 0.8), row(4, 0.9)};
  EXPECT_EQ(first_iteration_reaching(rows, 0.8), 3u);
  EXPECT_FALSE(first_iteration_reaching(rows, 0.95).has_value());
}

double attribute(const std::string& svg, const std::string& label, const std::string& name) {
  const std::regex re("data-label=\"" + label + "\" data-mean=\"([^\"]+)\" data-stderr=\"([^\"]+)\"");
  std::smatch m;
  EXPECT_TRUE(std::regex_search(svg, m, re));
  return std::stod(m[name == "mean" ? 1 : 2].str());
}

TEST(Report, BandsUseSampleStdOverRootN) {
  std::vector<RunSeries> runs = {{"a", "r1", {row(1, 0.1), row(2, 0.2)}},
                                 {"a", "r2", {row(1, 0.3), row(2, 0.6)}},
                                 {"a", "r3", {row(1, 0.2), row(2, 1.0)}},
                                 {"b", "r4", {row(1, 0.5), row(2, 0.7)}}};
  const std::string bars = render_bars_svg(runs);
  EXPECT_NEAR(attribute(bars, "a", "mean"), 0.6, 1e-15);
  // finals 0.2, 0.6, 1.0: sample std 0.4, standard error 0.4 / sqrt(3)
  EXPECT_NEAR(attribute(bars, "a", "stderr"), 0.4 / std::sqrt(3.0), 1e-15);
  EXPECT_EQ(attribute(bars, "b", "stderr"), 0.0);
  const std::string curves = render_curves_svg(runs);
  EXPECT_NE(curves.find("class=\"band\" data-label=\"a\""), std::string::npos);
  EXPECT_EQ(curves.find("class=\"band\" data-label=\"b\""), std::string::npos);
  EXPECT_EQ(curves.find("href"), std::string::npos);
  EXPECT_NE(curves.find("viewBox=\"0 0 800 500\""), std::string::npos);
  EXPECT_EQ(render_summary_csv(runs),
            "label,run_dir,final_iteration,final_normalized_score,first_iteration_at_0.8\n"
            "a,r1,2,0.20000000000000001,\n"
            "a,r2,2,0.59999999999999998,\n"
            "a,r3,2,1,2\n"
            "b,r4,2,0.69999999999999996,\n");
}

TEST(Report, SingleRunHasNoBand) {
  const std::vector<RunSeries> runs = {{"solo", "r", {row(1, 0.4)}}};
  EXPECT_EQ(render_curves_svg(runs).find("class=\"band\""), std::string::npos);
  EXPECT_EQ(attribute(render_bars_svg(runs), "solo", "stderr"), 0.0);
}

TEST_F(CliDir, EmitReportTwiceIsByteIdentical) {
  for (int r = 0; r < 3; ++r) {
    const fs::path run = dir_ / ("run" + std::to_string(r));
    fs::create_directories(run);
    std::ofstream(run / "config.txt") << "label=grp\n";
    std::ofstream m(run / "metrics.csv");
    m << kMetricsHeader << '\n';
    for (std::size_t it = 1; it <= 4; ++it) m << format_metrics_row(row(it, 0.1 * it + 0.05 * r)) << '\n';
  }
  const std::vector<fs::path> dirs = {dir_ / "run0", dir_ / "run1", dir_ / "run2"};
  emit_report(dirs, dir_ / "o1");
  emit_report(dirs, dir_ / "o2");
  for (const char* f : {"curves.svg", "bars.svg", "summary.csv"}) {
    EXPECT_FALSE(slurp(dir_ / "o1" / f).empty()) << f;
    EXPECT_EQ(slurp(dir_ / "o1" / f), slurp(dir_ / "o2" / f)) << f;
  }
  EXPECT_EQ(load_run(dir_ / "run0").label, "grp");
}

}  // namespace
}  // namespace pifo::cli
