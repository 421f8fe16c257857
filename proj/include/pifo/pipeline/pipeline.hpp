#ifndef PIFO_PIPELINE_PIPELINE_HPP_
#define PIFO_PIPELINE_PIPELINE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pifo/agent/discriminator.hpp"
#include "pifo/agent/policy.hpp"
#include "pifo/env/demo.hpp"
#include "pifo/env/env.hpp"
#include "pifo/pipeline/metrics.hpp"
#include "pifo/rl/config.hpp"

namespace pifo {

// --- agent checkpoints ---

// Policy and value entries, the discriminator when present, and two marker
// entries "meta/env/<id>" and "meta/mode/<mode>" (dims [1]).
struct AgentCheckpoint {
  env::EnvId env = env::EnvId::kCartpoleBalance;
  PolicyMode mode = PolicyMode::kProprio;
  nn::ParamSet policy;
  nn::ParamSet value;
  nn::ParamSet disc;  // empty for expert runs
};

void save_agent(const std::filesystem::path& path, env::EnvId env, const GaussianPolicy& policy, const ValueNet& value,
                const Discriminator* disc = nullptr);
// Throws CheckpointError for file problems and ConfigError for missing metadata.
AgentCheckpoint load_agent(const std::filesystem::path& path);
GaussianPolicy policy_from(const AgentCheckpoint& ckpt);

// Seeds of the networks a run starts from, so a fresh initialization can be
// rebuilt for the random baseline.
std::uint64_t policy_seed(std::uint64_t seed);
std::uint64_t value_seed(std::uint64_t seed);
std::uint64_t disc_seed(std::uint64_t seed);

// --- evaluation ---

struct EvalSummary {
  std::vector<double> returns;
  std::vector<int> lengths;
  std::vector<std::vector<double>> final_states;  // state after the last step of each episode
  double mean_return = 0.0;
  double std_error = 0.0;  // sample std / sqrt(episodes)
};

// Mean-action episodes; episode i resets from derive_seed(seed, "eval", i).
// Episodes may run on `threads` threads; results are ordered by episode index.
EvalSummary evaluate_policy(const GaussianPolicy& policy, env::EnvId env, std::size_t episodes, std::uint64_t seed,
                            std::size_t threads = 1);

// (R - R_random) / (R_expert - R_random), unclamped. Throws EvaluationError
// when the two baselines coincide.
double normalized_score(double r, double r_random, double r_expert);

struct EvaluationReport {
  double mean_return = 0.0;
  double std_error = 0.0;
  double normalized_score = 0.0;
  double random_return = 0.0;
  double expert_return = 0.0;
};

// The candidate, a fresh initialization drawn from policy_seed(seed) and the
// expert all play the same `episodes` (>= 2) evaluation episodes.
EvaluationReport evaluate(const std::filesystem::path& checkpoint, env::EnvId env, std::size_t episodes,
                          const std::filesystem::path& expert_checkpoint, std::uint64_t seed, std::size_t threads = 1);

// --- training runs ---

struct RunRecord {
  std::filesystem::path dir;
  rl::TrainConfig config;
  std::vector<MetricsRow> rows;
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path best_checkpoint;
  // First iteration whose evaluation reached cfg.stop_score, if any.
  std::optional<std::size_t> stopped_at;
};

// Called after every evaluation with the iteration, the evaluation and (for
// imitation) the normalized score; returning true ends the run after that row.
using EvalCallback = std::function<bool(std::size_t iteration, const EvalSummary& eval, double score)>;

// PPO on the ground-truth reward. Writes config.txt, metrics.csv and
// checkpoints/ under `out_dir`; best.pifo tracks the best evaluation return.
// The normalized score column is 0 unless cfg.expert_checkpoint is set.
RunRecord train_expert(const rl::TrainConfig& cfg, const std::filesystem::path& out_dir,
                       const EvalCallback& on_eval = {});

// K episodes of the checkpointed policy (mean actions when `deterministic`),
// frames only. Throws ConfigError if the checkpoint was trained on another env.
env::DemoSet record_demos(const std::filesystem::path& checkpoint, env::EnvId env, std::size_t episodes,
                          bool deterministic, std::uint64_t seed);

// The adversarial loop against video-only demonstrations: rollout, stacks,
// discriminator rewards, GAE, PPO, discriminator update, metrics row.
// cfg.mode picks the proprio or vision policy; cfg.expert_checkpoint is required
// for the normalized score. best.pifo tracks the best normalized score.
RunRecord imitate(const env::DemoSet& demos, const rl::TrainConfig& cfg, const std::filesystem::path& out_dir,
                  const EvalCallback& on_eval = {});

}  // namespace pifo

#endif  // PIFO_PIPELINE_PIPELINE_HPP_
