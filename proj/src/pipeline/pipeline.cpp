#include "pifo/pipeline/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "pifo/bytes.hpp"
#include "pifo/errors.hpp"
#include "pifo/nn/adam.hpp"
#include "pifo/nn/checkpoint.hpp"
#include "pifo/parallel.hpp"
#include "pifo/rl/ppo.hpp"
#include "pifo/rl/rollout.hpp"

namespace pifo {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kMetaEnv = "meta/env/";
constexpr std::string_view kMetaMode = "meta/mode/";
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool starts_with(std::string_view s, std::string_view prefix) { return s.substr(0, prefix.size()) == prefix; }

double mean_or(std::span<const double> v, double fallback) {
  return v.empty() ? fallback : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Owns the on-disk side of a run: config.txt, metrics.csv, checkpoints/.
class RunWriter {
 public:
  RunWriter(const fs::path& dir, const rl::TrainConfig& cfg) : dir_(dir) {
    fs::create_directories(dir / "checkpoints");
    write_file(dir / "config.txt", rl::serialize_config(cfg));
    metrics_.open(dir / "metrics.csv", std::ios::binary | std::ios::trunc);
    if (!metrics_) throw UsageError("cannot write " + (dir / "metrics.csv").string());
    metrics_ << kMetricsHeader << '\n';
    metrics_.flush();
  }

  void append(const MetricsRow& row) {
    metrics_ << format_metrics_row(row) << '\n';
    metrics_.flush();
  }

  fs::path iteration_path(std::size_t iteration) const {
    char name[32];
    std::snprintf(name, sizeof name, "iter_%06zu.pifo", iteration);
    return dir_ / "checkpoints" / name;
  }
  fs::path best_path() const { return dir_ / "checkpoints" / "best.pifo"; }

 private:
  fs::path dir_;
  std::ofstream metrics_;
};

class Stopwatch {
 public:
  explicit Stopwatch(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

void mark_aborted(MetricsRow& row) {
  row.policy_loss = row.value_loss = row.entropy = row.clip_fraction = kNaN;
}

}  // namespace

// --- agent checkpoints ---

std::uint64_t policy_seed(std::uint64_t seed) { return derive_seed(seed, "policy"); }
std::uint64_t value_seed(std::uint64_t seed) { return derive_seed(seed, "value"); }
std::uint64_t disc_seed(std::uint64_t seed) { return derive_seed(seed, "disc"); }

void save_agent(const fs::path& path, env::EnvId env, const GaussianPolicy& policy, const ValueNet& value,
                const Discriminator* disc) {
  nn::ParamSet all;
  auto take = [&all](const nn::ParamSet& set) {
    for (const auto& e : set.entries()) all.add(e.name, e.value);
  };
  take(policy.params());
  take(value.params());
  if (disc != nullptr) take(disc->params());
  all.add(std::string(kMetaEnv) + std::string(env::to_string(env)), nn::Tensor({1}, 0.0));
  all.add(std::string(kMetaMode) + std::string(to_string(policy.mode())), nn::Tensor({1}, 0.0));
  nn::save_checkpoint(all, path);
}

AgentCheckpoint load_agent(const fs::path& path) {
  const nn::ParamSet all = nn::load_checkpoint(path);
  AgentCheckpoint out;
  bool have_env = false;
  bool have_mode = false;
  for (const auto& e : all.entries()) {
    if (starts_with(e.name, kMetaEnv)) {
      out.env = env::parse_env_id(std::string_view(e.name).substr(kMetaEnv.size()));
      have_env = true;
    } else if (starts_with(e.name, kMetaMode)) {
      try {
        out.mode = parse_policy_mode(std::string_view(e.name).substr(kMetaMode.size()));
      } catch (const UsageError& err) {
        throw ConfigError(path.string() + ": " + err.what());
      }
      have_mode = true;
    } else if (starts_with(e.name, "policy/")) {
      out.policy.add(e.name, e.value);
    } else if (starts_with(e.name, "value/")) {
      out.value.add(e.name, e.value);
    } else if (starts_with(e.name, "disc/")) {
      out.disc.add(e.name, e.value);
    } else {
      throw ConfigError(path.string() + ": unexpected checkpoint entry '" + e.name + "'");
    }
  }
  if (!have_env || !have_mode) throw ConfigError(path.string() + ": not an agent checkpoint (missing env/mode metadata)");
  return out;
}

GaussianPolicy policy_from(const AgentCheckpoint& ckpt) {
  const auto& spec = env::spec_for(ckpt.env);
  return GaussianPolicy(ckpt.mode, spec.proprio_dim, spec.action_dim, ckpt.policy);
}

// --- evaluation ---

EvalSummary evaluate_policy(const GaussianPolicy& policy, env::EnvId env, std::size_t episodes, std::uint64_t seed,
                            std::size_t threads) {
  const auto& spec = env::spec_for(env);
  const bool vision = policy.mode() == PolicyMode::kVision;
  EvalSummary out;
  out.returns.resize(episodes);
  out.lengths.resize(episodes);
  out.final_states.resize(episodes);
  parallel_for(episodes, threads, [&](std::size_t i) {
    env::EnvState state = env::reset(spec, derive_seed(seed, "eval", i));
    FrameHistory history;
    if (vision) history.reset(env::render(spec, state));
    double ret = 0.0;
    for (;;) {
      const GaussianDist dist = vision ? policy_forward(policy, history.stack()) : policy_forward(policy, state.s);
      const auto result = env::step(spec, state, dist.mean);
      ret += result.reward;
      state = result.next;
      if (result.done) break;
      if (vision) history.push(env::render(spec, state));
    }
    out.returns[i] = ret;
    out.lengths[i] = state.step_index;
    out.final_states[i] = state.s;
  });
  out.mean_return = mean_or(out.returns, 0.0);
  if (episodes >= 2) {
    double ss = 0.0;
    for (double r : out.returns) ss += (r - out.mean_return) * (r - out.mean_return);
    out.std_error = std::sqrt(ss / static_cast<double>(episodes - 1)) / std::sqrt(static_cast<double>(episodes));
  }
  return out;
}

double normalized_score(double r, double r_random, double r_expert) {
  if (r_expert == r_random) {
    throw EvaluationError("normalized score undefined: expert and random returns are both " + std::to_string(r_random));
  }
  return (r - r_random) / (r_expert - r_random);
}

EvaluationReport evaluate(const fs::path& checkpoint, env::EnvId env, std::size_t episodes,
                          const fs::path& expert_checkpoint, std::uint64_t seed, std::size_t threads) {
  if (episodes < 2) throw UsageError("evaluate: need at least 2 episodes for a standard error");
  const AgentCheckpoint cand = load_agent(checkpoint);
  const AgentCheckpoint expert = load_agent(expert_checkpoint);
  for (const auto* c : {&cand, &expert}) {
    if (c->env != env) {
      throw ConfigError("checkpoint trained on " + std::string(env::to_string(c->env)) + ", asked to evaluate on " +
                        std::string(env::to_string(env)));
    }
  }
  const GaussianPolicy fresh(cand.mode, env::spec_for(env), policy_seed(seed));
  const EvalSummary e = evaluate_policy(policy_from(cand), env, episodes, seed, threads);
  const EvalSummary r = evaluate_policy(fresh, env, episodes, seed, threads);
  const EvalSummary x = evaluate_policy(policy_from(expert), env, episodes, seed, threads);
  return {e.mean_return, e.std_error, normalized_score(e.mean_return, r.mean_return, x.mean_return), r.mean_return,
          x.mean_return};
}

// --- expert training ---

RunRecord train_expert(const rl::TrainConfig& cfg, const fs::path& out_dir, const EvalCallback& on_eval) {
  rl::validate(cfg);
  const env::EnvId env_id = env::parse_env_id(cfg.env);
  const auto& spec = env::spec_for(env_id);
  const PolicyMode mode = parse_policy_mode(cfg.mode);
  const std::size_t threads = rl::thread_count_from_env();

  GaussianPolicy policy(mode, spec, policy_seed(cfg.seed));
  ValueNet value(mode, spec.proprio_dim, value_seed(cfg.seed));
  nn::AdamState policy_opt(policy.params(), {.learning_rate = cfg.policy_lr});
  nn::AdamState value_opt(value.params(), {.learning_rate = cfg.value_lr});
  rl::EnvEnsemble envs(spec, cfg.num_envs, derive_seed(cfg.seed, "env"), mode == PolicyMode::kVision);
  Rng ppo_rng(derive_seed(cfg.seed, "ppo"));

  std::optional<std::pair<double, double>> baselines;  // (random, expert)
  if (!cfg.expert_checkpoint.empty()) {
    const AgentCheckpoint expert = load_agent(cfg.expert_checkpoint);
    if (expert.env != env_id) throw ConfigError("expert_checkpoint was trained on another environment");
    baselines.emplace(evaluate_policy(policy, env_id, cfg.eval_episodes, cfg.seed, threads).mean_return,
                      evaluate_policy(policy_from(expert), env_id, cfg.eval_episodes, cfg.seed, threads).mean_return);
    normalized_score(0.0, baselines->first, baselines->second);
  }

  RunWriter writer(out_dir, cfg);
  RunRecord record{out_dir, cfg, {}, {}, writer.best_path(), std::nullopt};
  save_agent(writer.iteration_path(0), env_id, policy, value);
  record.checkpoints.push_back(writer.iteration_path(0));
  save_agent(writer.best_path(), env_id, policy, value);

  const Stopwatch clock(cfg.record_wall_clock);
  double best_return = -std::numeric_limits<double>::infinity();
  double last_return = 0.0;
  double last_length = 0.0;
  double score = 0.0;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    rl::RolloutBatch batch = rl::collect_rollout(policy, value, envs, cfg.rollout_steps, rl::RewardSource::kGroundTruth, threads);
    rl::AdvantageEstimate adv = rl::compute_gae(batch, cfg.gamma, cfg.gae_lambda);
    rl::normalize_advantages(adv.advantages);

    MetricsRow row;
    row.iteration = it;
    const nn::ParamSet policy_before = policy.params();
    const nn::ParamSet value_before = value.params();
    const nn::AdamState policy_opt_before = policy_opt;
    const nn::AdamState value_opt_before = value_opt;
    try {
      const auto d = rl::ppo_update(policy, value, batch, adv, cfg, policy_opt, value_opt, ppo_rng);
      row.policy_loss = d.policy_loss;
      row.value_loss = d.value_loss;
      row.entropy = d.entropy;
      row.clip_fraction = d.clip_fraction;
    } catch (const NonFiniteError&) {
      policy.params() = policy_before;
      value.params() = value_before;
      policy_opt = policy_opt_before;
      value_opt = value_opt_before;
      mark_aborted(row);
    }

    std::vector<double> lengths(batch.episode_lengths.begin(), batch.episode_lengths.end());
    last_return = mean_or(batch.episode_returns, last_return);
    last_length = mean_or(lengths, last_length);
    row.mean_true_return = last_return;
    row.mean_episode_len = last_length;

    bool stop = false;
    if (it % cfg.eval_every == 0 || it == cfg.iterations) {
      const EvalSummary eval = evaluate_policy(policy, env_id, cfg.eval_episodes, cfg.seed, threads);
      if (baselines) score = normalized_score(eval.mean_return, baselines->first, baselines->second);
      if (eval.mean_return > best_return) {
        best_return = eval.mean_return;
        save_agent(writer.best_path(), env_id, policy, value);
      }
      if (eval.mean_return >= cfg.stop_score) stop = true;
      if (on_eval && on_eval(it, eval, score)) stop = true;
    }
    row.normalized_score = score;
    row.wall_clock_s = clock.seconds();
    writer.append(row);
    record.rows.push_back(row);

    if (it % cfg.checkpoint_every == 0) {
      save_agent(writer.iteration_path(it), env_id, policy, value);
      record.checkpoints.push_back(writer.iteration_path(it));
    }
    if (stop) {
      record.stopped_at = it;
      break;
    }
  }
  return record;
}

// --- demonstrations ---

env::DemoSet record_demos(const fs::path& checkpoint, env::EnvId env, std::size_t episodes, bool deterministic,
                          std::uint64_t seed) {
  if (episodes == 0) throw UsageError("record_demos: need at least one trajectory");
  const AgentCheckpoint ckpt = load_agent(checkpoint);
  if (ckpt.env != env) {
    throw ConfigError("checkpoint " + checkpoint.string() + " was trained on " + std::string(env::to_string(ckpt.env)) +
                      ", not " + std::string(env::to_string(env)));
  }
  const GaussianPolicy policy = policy_from(ckpt);
  const auto& spec = env::spec_for(env);
  const bool vision = policy.mode() == PolicyMode::kVision;

  env::DemoSet demos{std::string(env::to_string(env)), {}};
  for (std::size_t k = 0; k < episodes; ++k) {
    env::EnvState state = env::reset(spec, derive_seed(seed, "demo", k));
    Rng rng(derive_seed(seed, "demo-actions", k));
    std::vector<env::Frame> frames{env::render(spec, state)};
    FrameHistory history;
    history.reset(frames.back());
    for (;;) {
      const GaussianDist dist = vision ? policy_forward(policy, history.stack()) : policy_forward(policy, state.s);
      const auto action = deterministic ? dist.mean : sample_action(dist, rng);
      const auto result = env::step(spec, state, action);
      if (result.done) break;
      state = result.next;
      frames.push_back(env::render(spec, state));
      history.push(frames.back());
    }
    demos.trajectories.push_back(std::move(frames));
  }
  return demos;
}

// --- imitation ---

RunRecord imitate(const env::DemoSet& demos, const rl::TrainConfig& cfg, const fs::path& out_dir,
                  const EvalCallback& on_eval) {
  rl::validate(cfg);
  const env::EnvId env_id = env::parse_env_id(cfg.env);
  if (env::parse_env_id(demos.env_id) != env_id) {
    throw ConfigError("demos were recorded on " + demos.env_id + ", run is on " + cfg.env);
  }
  if (cfg.expert_checkpoint.empty()) throw ConfigError("imitate: config key expert_checkpoint is required for scoring");
  if (cfg.disc_epochs > 0 && cfg.rollout_steps < cfg.disc_minibatch) {
    throw ConfigError("imitate: rollout_steps must be at least disc_minibatch");
  }
  const auto& spec = env::spec_for(env_id);
  const PolicyMode mode = parse_policy_mode(cfg.mode);
  const std::size_t threads = rl::thread_count_from_env();

  std::vector<FrameStack> expert_stacks;
  for (const auto& traj : demos.trajectories) {
    if (traj.empty()) continue;
    auto stacks = build_stacks(traj);
    expert_stacks.insert(expert_stacks.end(), stacks.begin(), stacks.end());
  }
  if (expert_stacks.empty()) throw ConfigError("imitate: demo set contains no frames");

  GaussianPolicy policy(mode, spec, policy_seed(cfg.seed));
  ValueNet value(mode, spec.proprio_dim, value_seed(cfg.seed));
  Discriminator disc(disc_seed(cfg.seed));
  nn::AdamState policy_opt(policy.params(), {.learning_rate = cfg.policy_lr});
  nn::AdamState value_opt(value.params(), {.learning_rate = cfg.value_lr});
  nn::AdamState disc_opt(disc.params(), {.learning_rate = cfg.disc_lr});
  rl::EnvEnsemble envs(spec, cfg.num_envs, derive_seed(cfg.seed, "env"), true);
  Rng ppo_rng(derive_seed(cfg.seed, "ppo"));
  Rng disc_rng(derive_seed(cfg.seed, "disc-update"));
  Rng sample_rng(derive_seed(cfg.seed, "expert-sample"));

  const AgentCheckpoint expert = load_agent(cfg.expert_checkpoint);
  if (expert.env != env_id) throw ConfigError("expert_checkpoint was trained on another environment");
  const double r_random = evaluate_policy(policy, env_id, cfg.eval_episodes, cfg.seed, threads).mean_return;
  const double r_expert =
      evaluate_policy(policy_from(expert), env_id, cfg.eval_episodes, cfg.seed, threads).mean_return;
  normalized_score(r_random, r_random, r_expert);

  RunWriter writer(out_dir, cfg);
  RunRecord record{out_dir, cfg, {}, {}, writer.best_path(), std::nullopt};
  save_agent(writer.iteration_path(0), env_id, policy, value, &disc);
  record.checkpoints.push_back(writer.iteration_path(0));
  save_agent(writer.best_path(), env_id, policy, value, &disc);

  const Stopwatch clock(cfg.record_wall_clock);
  double best_score = 0.0;
  double score = 0.0;
  double last_return = 0.0;
  double last_length = 0.0;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    rl::RolloutBatch batch =
        rl::collect_rollout(policy, value, envs, cfg.rollout_steps, rl::RewardSource::kDiscriminator, threads);
    const std::vector<FrameStack> stacks = rl::imitator_stacks(batch);
    batch.rewards = rewards_from_discriminator(disc, stacks);
    rl::AdvantageEstimate adv = rl::compute_gae(batch, cfg.gamma, cfg.gae_lambda);
    rl::normalize_advantages(adv.advantages);

    std::vector<FrameStack> expert_batch;
    expert_batch.reserve(stacks.size());
    for (std::size_t i = 0; i < stacks.size(); ++i) expert_batch.push_back(expert_stacks[sample_rng.below(expert_stacks.size())]);

    MetricsRow row;
    row.iteration = it;
    const nn::ParamSet policy_before = policy.params();
    const nn::ParamSet value_before = value.params();
    const nn::ParamSet disc_before = disc.params();
    const nn::AdamState policy_opt_before = policy_opt;
    const nn::AdamState value_opt_before = value_opt;
    const nn::AdamState disc_opt_before = disc_opt;
    try {
      const auto p = rl::ppo_update(policy, value, batch, adv, cfg, policy_opt, value_opt, ppo_rng);
      const auto d = disc_update(disc, stacks, expert_batch, disc_opt, cfg.disc_minibatch, cfg.disc_epochs, disc_rng);
      row.policy_loss = p.policy_loss;
      row.value_loss = p.value_loss;
      row.entropy = p.entropy;
      row.clip_fraction = p.clip_fraction;
      row.disc_loss = d.loss;
      row.mean_D_imitator = d.mean_d_imitator;
      row.mean_D_expert = d.mean_d_expert;
    } catch (const NonFiniteError&) {
      policy.params() = policy_before;
      value.params() = value_before;
      disc.params() = disc_before;
      policy_opt = policy_opt_before;
      value_opt = value_opt_before;
      disc_opt = disc_opt_before;
      mark_aborted(row);
      row.disc_loss = row.mean_D_imitator = row.mean_D_expert = kNaN;
    }

    std::vector<double> lengths(batch.episode_lengths.begin(), batch.episode_lengths.end());
    last_return = mean_or(batch.episode_returns, last_return);
    last_length = mean_or(lengths, last_length);
    row.mean_true_return = last_return;
    row.mean_episode_len = last_length;

    bool stop = false;
    if (it % cfg.eval_every == 0 || it == cfg.iterations) {
      const EvalSummary eval = evaluate_policy(policy, env_id, cfg.eval_episodes, cfg.seed, threads);
      score = normalized_score(eval.mean_return, r_random, r_expert);
      if (score > best_score) {
        best_score = score;
        save_agent(writer.best_path(), env_id, policy, value, &disc);
      }
      if (score >= cfg.stop_score) stop = true;
      if (on_eval && on_eval(it, eval, score)) stop = true;
    }
    row.normalized_score = score;
    row.wall_clock_s = clock.seconds();
    writer.append(row);
    record.rows.push_back(row);

    if (it % cfg.checkpoint_every == 0) {
      save_agent(writer.iteration_path(it), env_id, policy, value, &disc);
      record.checkpoints.push_back(writer.iteration_path(it));
    }
    if (stop) {
      record.stopped_at = it;
      break;
    }
  }
  return record;
}

}  // namespace pifo
