#ifndef PIFO_RL_CONFIG_HPP_
#define PIFO_RL_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <string_view>

namespace pifo::rl {

// Every knob of a training run. Serialized as flat `key=value` lines with the
// member names as keys; doubles use %.17g so a snapshot reproduces the run.
struct TrainConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_ratio = 0.2;
  double entropy_coef = 0.01;
  double policy_lr = 3e-4;
  double value_lr = 3e-4;
  double disc_lr = 1e-4;
  std::size_t rollout_steps = 2048;
  std::size_t minibatch = 64;
  std::size_t ppo_epochs = 10;
  std::size_t iterations = 300;
  std::uint64_t seed = 0;

  std::size_t disc_epochs = 3;
  std::size_t disc_minibatch = 64;
  std::size_t num_envs = 1;
  std::size_t eval_every = 10;
  std::size_t eval_episodes = 10;
  std::size_t checkpoint_every = 50;
  // Stop once an evaluation reaches this normalized score (imitation) or mean
  // return (expert training). +inf never stops early.
  double stop_score = std::numeric_limits<double>::infinity();
  bool record_wall_clock = false;

  std::string env = "cartpole-balance";
  std::string mode = "proprio";
  std::string demos;
  std::string expert_checkpoint;
  std::string label;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Overlays `key=value` lines onto `base`. Blank lines and lines starting with
// '#' are skipped. Unknown keys and unparsable values throw ConfigError.
TrainConfig parse_config(std::string_view text, TrainConfig base = {});
TrainConfig load_config(const std::filesystem::path& path, TrainConfig base = {});

// Applies one `key=value` override; same errors as parse_config.
void set_config_value(TrainConfig& cfg, std::string_view key, std::string_view value);

std::string serialize_config(const TrainConfig& cfg);

// Throws ConfigError naming the first out-of-range field.
void validate(const TrainConfig& cfg);

}  // namespace pifo::rl

#endif  // PIFO_RL_CONFIG_HPP_
