#include "pifo/cli/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>

#include "pifo/agent/policy.hpp"
#include "pifo/cli/report.hpp"
#include "pifo/env/demo.hpp"
#include "pifo/env/env.hpp"
#include "pifo/errors.hpp"
#include "pifo/pipeline/pipeline.hpp"
#include "pifo/rl/config.hpp"
#include "pifo/rl/rollout.hpp"

namespace pifo::cli {

namespace {

CLI::Validator env_id_check() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        try {
          env::parse_env_id(s);
        } catch (const Error& e) {
          return e.what();
        }
        return {};
      },
      "ENV", "env id");
}

CLI::Validator mode_check() {
  return CLI::Validator(
      [](std::string& s) -> std::string {
        try {
          parse_policy_mode(s);
        } catch (const Error& e) {
          return e.what();
        }
        return {};
      },
      "MODE", "policy mode");
}

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

rl::TrainConfig effective_config(const Command& cmd) {
  rl::TrainConfig cfg = cmd.config.empty() ? rl::TrainConfig{} : rl::load_config(cmd.config);
  cfg.env = cmd.env;
  if (cmd.seed) cfg.seed = *cmd.seed;
  if (!cmd.mode.empty()) cfg.mode = cmd.mode;
  if (!cmd.demos.empty()) cfg.demos = cmd.demos;
  if (!cmd.expert_checkpoint.empty()) cfg.expert_checkpoint = cmd.expert_checkpoint;
  return cfg;
}

}  // namespace

Command parse_args(const std::vector<std::string>& args) {
  Command cmd;
  std::uint64_t seed = 0;

  CLI::App app{"Imitation from video-only demonstrations with a proprioceptive policy.", "pifo"};
  app.require_subcommand(1, 1);

  auto* train = app.add_subcommand("train-expert", "PPO on the ground-truth reward");
  train->add_option("--env", cmd.env, "environment id")->required()->check(env_id_check());
  train->add_option("--config", cmd.config, "key=value config file")->check(CLI::ExistingFile);
  train->add_option("--out", cmd.out, "run directory")->required();
  auto* train_seed = train->add_option("--seed", seed, "root seed");

  auto* demos = app.add_subcommand("record-demos", "roll out an expert and keep only its frames");
  demos->add_option("--checkpoint", cmd.checkpoint, "expert checkpoint")->required()->check(CLI::ExistingFile);
  demos->add_option("--env", cmd.env, "environment id")->required()->check(env_id_check());
  demos->add_option("--num-trajectories", cmd.num_trajectories, "episodes to record")->required()->check(CLI::PositiveNumber);
  demos->add_option("--deterministic", cmd.deterministic, "use mean actions (default true)");
  demos->add_option("--out", cmd.out, "demo file")->required();
  auto* demos_seed = demos->add_option("--seed", seed, "root seed");

  auto* imit = app.add_subcommand("imitate", "adversarial imitation from a demo file");
  imit->add_option("--demos", cmd.demos, "demo file")->required()->check(CLI::ExistingFile);
  imit->add_option("--env", cmd.env, "environment id")->required()->check(env_id_check());
  imit->add_option("--mode", cmd.mode, "proprio|vision")->required()->check(mode_check());
  imit->add_option("--config", cmd.config, "key=value config file")->check(CLI::ExistingFile);
  imit->add_option("--expert-checkpoint", cmd.expert_checkpoint, "expert used for the normalized score")
      ->check(CLI::ExistingFile);
  imit->add_option("--out", cmd.out, "run directory")->required();
  auto* imit_seed = imit->add_option("--seed", seed, "root seed");

  auto* eval = app.add_subcommand("evaluate", "mean return, standard error and normalized score");
  eval->add_option("--checkpoint", cmd.checkpoint, "checkpoint to score")->required()->check(CLI::ExistingFile);
  eval->add_option("--expert-checkpoint", cmd.expert_checkpoint, "expert reference")->required()->check(CLI::ExistingFile);
  eval->add_option("--env", cmd.env, "environment id")->required()->check(env_id_check());
  eval->add_option("--episodes", cmd.episodes, "evaluation episodes (>= 2)")->required()->check(CLI::Range(2, 1 << 30));
  auto* eval_seed = eval->add_option("--seed", seed, "root seed");

  auto* report = app.add_subcommand("report", "SVG learning curves, bar chart and summary.csv");
  report->add_option("--run-dirs", cmd.run_dirs, "comma-separated run directories")->required()->delimiter(',');
  report->add_option("--out", cmd.out, "output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    cmd.kind = CommandKind::kHelp;
    cmd.help_text = app.help();
    for (auto* sub : app.get_subcommands()) cmd.help_text = sub->help();
    return cmd;
  } catch (const CLI::CallForAllHelp&) {
    cmd.kind = CommandKind::kHelp;
    cmd.help_text = app.help("", CLI::AppFormatMode::All);
    return cmd;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (*train) {
    cmd.kind = CommandKind::kTrainExpert;
    if (train_seed->count()) cmd.seed = seed;
  } else if (*demos) {
    cmd.kind = CommandKind::kRecordDemos;
    if (demos_seed->count()) cmd.seed = seed;
  } else if (*imit) {
    cmd.kind = CommandKind::kImitate;
    if (imit_seed->count()) cmd.seed = seed;
  } else if (*eval) {
    cmd.kind = CommandKind::kEvaluate;
    if (eval_seed->count()) cmd.seed = seed;
  } else {
    cmd.kind = CommandKind::kReport;
  }
  return cmd;
}

Command parse_args(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return parse_args(args);
}

int run(const Command& cmd, std::ostream& out) {
  switch (cmd.kind) {
    case CommandKind::kHelp:
      out << cmd.help_text;
      return 0;
    case CommandKind::kTrainExpert: {
      const RunRecord rec = train_expert(effective_config(cmd), cmd.out);
      out << "train-expert: " << rec.rows.size() << " iterations, best checkpoint " << rec.best_checkpoint.string()
          << '\n';
      return 0;
    }
    case CommandKind::kRecordDemos: {
      const env::DemoSet demos = record_demos(cmd.checkpoint, env::parse_env_id(cmd.env), cmd.num_trajectories,
                                              cmd.deterministic, cmd.seed.value_or(0));
      env::save_demos(demos, cmd.out);
      out << "record-demos: " << demos.trajectories.size() << " trajectories, " << demos.total_frames()
          << " frames -> " << cmd.out << '\n';
      return 0;
    }
    case CommandKind::kImitate: {
      const env::DemoSet demos = env::load_demos(cmd.demos);
      const RunRecord rec = imitate(demos, effective_config(cmd), cmd.out);
      out << "imitate: " << rec.rows.size() << " iterations, final normalized score "
          << fmt17(rec.rows.empty() ? 0.0 : rec.rows.back().normalized_score) << '\n';
      return 0;
    }
    case CommandKind::kEvaluate: {
      const EvaluationReport r = evaluate(cmd.checkpoint, env::parse_env_id(cmd.env), cmd.episodes,
                                          cmd.expert_checkpoint, cmd.seed.value_or(0), rl::thread_count_from_env());
      out << "mean_return=" << fmt17(r.mean_return) << " std_error=" << fmt17(r.std_error)
          << " normalized_score=" << fmt17(r.normalized_score) << '\n';
      return 0;
    }
    case CommandKind::kReport: {
      std::vector<std::filesystem::path> dirs(cmd.run_dirs.begin(), cmd.run_dirs.end());
      emit_report(dirs, cmd.out);
      out << "report: " << dirs.size() << " runs -> " << cmd.out << '\n';
      return 0;
    }
  }
  return 1;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    return run(parse_args(argc, argv), out);
  } catch (const UsageError& e) {
    err << "pifo: usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "pifo: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace pifo::cli
