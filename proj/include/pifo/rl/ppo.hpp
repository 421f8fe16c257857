#ifndef PIFO_RL_PPO_HPP_
#define PIFO_RL_PPO_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "pifo/agent/policy.hpp"
#include "pifo/nn/adam.hpp"
#include "pifo/nn/autodiff.hpp"
#include "pifo/rl/config.hpp"
#include "pifo/rl/rollout.hpp"
#include "pifo/rng.hpp"

namespace pifo::rl {

struct AdvantageEstimate {
  std::vector<double> advantages;
  std::vector<double> returns;  // advantage + V(s), the value-regression target
};

// delta[t] = r[t] + gamma * V(s[t+1]) * (1 - done[t]) - V(s[t])
// A[t]     = delta[t] + gamma * lambda * (1 - done[t]) * A[t+1]
// over one contiguous run; V(s[T]) is `bootstrap` (ignored when done[T-1]).
AdvantageEstimate compute_gae(std::span<const double> rewards, std::span<const double> values,
                              std::span<const std::uint8_t> dones, double bootstrap, double gamma, double gae_lambda);

// Applies the span version to every chunk of the batch.
AdvantageEstimate compute_gae(const RolloutBatch& batch, double gamma, double gae_lambda);

// Shift to mean 0, scale to population std 1. A constant vector becomes all zeros.
void normalize_advantages(std::vector<double>& advantages);

struct SurrogateStats {
  double surrogate = 0.0;  // mean of the clipped objective, before the entropy bonus
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

// Scalar loss = -( mean[min(rho*A, clip(rho, 1-eps, 1+eps)*A)] + entropy_coef * H ),
// rho = exp(log pi(a|x) - old_log_prob).
nn::Var ppo_surrogate(nn::Tape& tape, GaussianPolicy& policy, nn::Var inputs, const nn::Tensor& actions,
                      std::span<const double> old_log_probs, std::span<const double> advantages, double clip_ratio,
                      double entropy_coef, SurrogateStats* stats = nullptr);

// Policy (or value) network inputs for the given batch rows: [n, p] states or [n, 4, 64, 64] stacks.
nn::Tensor policy_inputs(const RolloutBatch& batch, PolicyMode mode, std::span<const std::size_t> rows);

struct PpoDiagnostics {
  double policy_loss = 0.0;  // -surrogate, averaged over minibatches
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

// ppo_epochs passes over shuffled minibatches: one Adam step on the surrogate
// loss for the policy and one on mean (V - R)^2 for the value net per
// minibatch. A trailing partial minibatch is used as is. Throws NonFiniteError
// before stepping on a non-finite loss or gradient; earlier minibatches of the
// same call have already been applied by then.
PpoDiagnostics ppo_update(GaussianPolicy& policy, ValueNet& value, const RolloutBatch& batch,
                          const AdvantageEstimate& adv, const TrainConfig& cfg, nn::AdamState& policy_optimizer,
                          nn::AdamState& value_optimizer, Rng& rng);

}  // namespace pifo::rl

#endif  // PIFO_RL_PPO_HPP_
