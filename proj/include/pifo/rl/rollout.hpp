#ifndef PIFO_RL_ROLLOUT_HPP_
#define PIFO_RL_ROLLOUT_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "pifo/agent/frame_stack.hpp"
#include "pifo/agent/policy.hpp"
#include "pifo/env/env.hpp"
#include "pifo/rng.hpp"

namespace pifo::rl {

enum class RewardSource { kGroundTruth, kDiscriminator };

// A run of consecutive steps of one episode inside a batch, with just enough
// neighbouring frames to build its discriminator stacks without crossing into
// another episode.
struct Segment {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<env::Frame> before;    // up to two earlier frames of the same episode
  std::optional<env::Frame> after;   // o[end] when the episode continues past the batch
};

// Steps of one environment slot, contiguous in the batch.
struct Chunk {
  std::size_t begin = 0;
  std::size_t end = 0;
  double bootstrap_value = 0.0;  // V(s[end]) when the last step is not done, else 0
};

struct RolloutBatch {
  std::size_t proprio_dim = 0;
  std::size_t action_dim = 0;

  std::vector<double> states;   // [T, proprio_dim]
  std::vector<double> actions;  // [T, action_dim], as sampled (before env clamping)
  std::vector<double> log_probs;
  std::vector<double> rewards;       // training reward; zero until filled for the discriminator source
  std::vector<double> true_rewards;  // ground truth, for reporting
  std::vector<double> values;
  std::vector<std::uint8_t> dones;   // episode ended after this step (termination or time limit)

  std::vector<env::Frame> frames;          // o[t], empty unless frames were tracked
  std::vector<FrameStack> observations;    // causal stacks fed to a vision policy
  std::vector<Segment> segments;           // empty unless frames were tracked
  std::vector<Chunk> chunks;

  std::vector<double> episode_returns;     // ground-truth returns of episodes finished in this batch
  std::vector<int> episode_lengths;

  std::size_t size() const noexcept { return log_probs.size(); }
  std::span<const double> state(std::size_t t) const { return {states.data() + t * proprio_dim, proprio_dim}; }
  std::span<const double> action(std::size_t t) const { return {actions.data() + t * action_dim, action_dim}; }
};

// One discriminator stack per step: build_stacks over each segment.
std::vector<FrameStack> imitator_stacks(const RolloutBatch& batch);

// Independent environment instances. Slot i draws from Rng(seed ^ i); episodes
// carry over between calls to collect_rollout.
class EnvEnsemble {
 public:
  EnvEnsemble(const env::EnvSpec& spec, std::size_t count, std::uint64_t seed, bool track_frames);

  const env::EnvSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return slots_.size(); }
  bool tracks_frames() const noexcept { return track_frames_; }

 private:
  friend RolloutBatch collect_rollout(const GaussianPolicy&, const ValueNet&, EnvEnsemble&, std::size_t,
                                      RewardSource, std::size_t);

  struct Slot {
    Rng rng;
    env::EnvState state;
    env::Frame frame;                  // o of the current state
    std::vector<env::Frame> recent;    // up to two frames preceding `frame` in this episode
    FrameHistory history;
    double episode_return = 0.0;
  };

  void begin_episode(Slot& slot) const;

  env::EnvSpec spec_;
  bool track_frames_;
  std::vector<Slot> slots_;
};

// Steps every slot for its share of `steps` (slot i takes steps/E, the first
// steps%E slots one more) with actions sampled from `policy`. Slots run on up to
// `threads` threads; the batch is assembled in slot order, so the result does not
// depend on the thread count. A vision policy requires an ensemble tracking frames.
RolloutBatch collect_rollout(const GaussianPolicy& policy, const ValueNet& value, EnvEnsemble& envs,
                             std::size_t steps, RewardSource source, std::size_t threads = 1);

// PIFO_THREADS, or 1 when unset. Throws ConfigError when not a positive integer.
std::size_t thread_count_from_env();

}  // namespace pifo::rl

#endif  // PIFO_RL_ROLLOUT_HPP_
