#include "pifo/rl/rollout.hpp"

#include <charconv>
#include <cstdlib>
#include <string>

#include "pifo/errors.hpp"
#include "pifo/parallel.hpp"

namespace pifo::rl {

namespace {

void append(RolloutBatch& dst, RolloutBatch&& src) {
  const std::size_t offset = dst.size();
  auto cat = [](auto& a, auto& b) { a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end())); };
  cat(dst.states, src.states);
  cat(dst.actions, src.actions);
  cat(dst.log_probs, src.log_probs);
  cat(dst.rewards, src.rewards);
  cat(dst.true_rewards, src.true_rewards);
  cat(dst.values, src.values);
  cat(dst.dones, src.dones);
  cat(dst.frames, src.frames);
  cat(dst.observations, src.observations);
  cat(dst.episode_returns, src.episode_returns);
  cat(dst.episode_lengths, src.episode_lengths);
  for (auto& seg : src.segments) {
    seg.begin += offset;
    seg.end += offset;
    dst.segments.push_back(std::move(seg));
  }
  for (auto chunk : src.chunks) {
    chunk.begin += offset;
    chunk.end += offset;
    dst.chunks.push_back(chunk);
  }
}

}  // namespace

std::vector<FrameStack> imitator_stacks(const RolloutBatch& batch) {
  if (batch.frames.size() != batch.size()) throw UsageError("imitator_stacks: batch was collected without frames");
  std::vector<FrameStack> out;
  out.reserve(batch.size());
  for (const auto& seg : batch.segments) {
    std::vector<env::Frame> frames(seg.before);
    frames.insert(frames.end(), batch.frames.begin() + seg.begin, batch.frames.begin() + seg.end);
    if (seg.after) frames.push_back(*seg.after);
    auto stacks = build_stacks(frames);
    out.insert(out.end(), stacks.begin() + seg.before.size(), stacks.begin() + seg.before.size() + (seg.end - seg.begin));
  }
  if (out.size() != batch.size()) throw StateError("imitator_stacks: segments do not tile the batch");
  return out;
}

EnvEnsemble::EnvEnsemble(const env::EnvSpec& spec, std::size_t count, std::uint64_t seed, bool track_frames)
    : spec_(spec), track_frames_(track_frames) {
  if (count == 0) throw UsageError("EnvEnsemble: need at least one environment");
  slots_.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    Slot slot{Rng(seed ^ static_cast<std::uint64_t>(i)), {}, {}, {}, {}, 0.0};
    begin_episode(slot);
    slots_.push_back(std::move(slot));
  }
}

void EnvEnsemble::begin_episode(Slot& slot) const {
  slot.state = env::reset(spec_, slot.rng.next());
  slot.episode_return = 0.0;
  slot.recent.clear();
  if (track_frames_) {
    slot.frame = env::render(spec_, slot.state);
    slot.history.reset(slot.frame);
  }
}

RolloutBatch collect_rollout(const GaussianPolicy& policy, const ValueNet& value, EnvEnsemble& envs,
                             std::size_t steps, RewardSource source, std::size_t threads) {
  const auto& spec = envs.spec();
  const bool vision = policy.mode() == PolicyMode::kVision;
  if (vision && !envs.tracks_frames()) throw UsageError("collect_rollout: vision policy needs rendered frames");
  if (policy.proprio_dim() != spec.proprio_dim || policy.action_dim() != spec.action_dim) {
    throw UsageError("collect_rollout: policy dims do not match environment " + std::string(env::to_string(spec.id)));
  }

  const std::size_t count = envs.size();
  std::vector<RolloutBatch> parts(count);

  auto run_slot = [&](std::size_t i) {
    auto& slot = envs.slots_[i];
    const std::size_t n = steps / count + (i < steps % count ? 1 : 0);
    RolloutBatch& b = parts[i];
    b.proprio_dim = spec.proprio_dim;
    b.action_dim = spec.action_dim;
    if (n == 0) return;

    Segment seg;
    seg.before = slot.recent;
    for (std::size_t t = 0; t < n; ++t) {
      GaussianDist dist;
      double v = 0.0;
      if (vision) {
        const FrameStack& obs = slot.history.stack();
        dist = policy_forward(policy, obs);
        v = value.values(stacks_to_tensor(std::span(&obs, 1)))[0];
        b.observations.push_back(obs);
      } else {
        dist = policy_forward(policy, slot.state.s);
        v = value.values(proprio_tensor(slot.state.s))[0];
      }
      const auto action = sample_action(dist, slot.rng);
      const auto result = env::step(spec, slot.state, action);

      b.states.insert(b.states.end(), slot.state.s.begin(), slot.state.s.end());
      b.actions.insert(b.actions.end(), action.begin(), action.end());
      b.log_probs.push_back(log_prob(dist, action));
      b.true_rewards.push_back(result.reward);
      b.rewards.push_back(source == RewardSource::kGroundTruth ? result.reward : 0.0);
      b.values.push_back(v);
      b.dones.push_back(result.done ? 1 : 0);
      if (envs.track_frames_) b.frames.push_back(slot.frame);

      slot.episode_return += result.reward;
      if (result.done) {
        b.episode_returns.push_back(slot.episode_return);
        b.episode_lengths.push_back(result.next.step_index);
        seg.end = t + 1;
        if (envs.track_frames_) b.segments.push_back(std::move(seg));
        envs.begin_episode(slot);
        seg = Segment{};
        seg.begin = t + 1;
      } else {
        slot.state = result.next;
        if (envs.track_frames_) {
          if (slot.recent.size() == 2) slot.recent.erase(slot.recent.begin());
          slot.recent.push_back(slot.frame);
          slot.frame = env::render(spec, slot.state);
          slot.history.push(slot.frame);
        }
      }
    }

    Chunk chunk{0, n, 0.0};
    if (!b.dones.back()) {
      seg.end = n;
      if (envs.track_frames_) {
        seg.after = slot.frame;
        b.segments.push_back(std::move(seg));
      }
      chunk.bootstrap_value = vision ? value.values(stacks_to_tensor(std::span(&slot.history.stack(), 1)))[0]
                                     : value.values(proprio_tensor(slot.state.s))[0];
    }
    b.chunks.push_back(chunk);
  };

  parallel_for(count, threads, run_slot);

  RolloutBatch batch;
  batch.proprio_dim = spec.proprio_dim;
  batch.action_dim = spec.action_dim;
  for (auto& part : parts) append(batch, std::move(part));
  return batch;
}

std::size_t thread_count_from_env() {
  const char* raw = std::getenv("PIFO_THREADS");
  if (raw == nullptr || *raw == '\0') return 1;
  const std::string s(raw);
  std::size_t n = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
  if (ec != std::errc() || ptr != s.data() + s.size() || n == 0) {
    throw ConfigError("PIFO_THREADS must be a positive integer, got '" + s + "'");
  }
  return n;
}

}  // namespace pifo::rl
