#include "pifo/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pifo/errors.hpp"

namespace pifo::rl {

namespace {

void require_finite(const nn::ParamSet& params, const char* what) {
  for (const auto& e : params.entries()) {
    if (!e.grad.all_finite()) throw NonFiniteError(std::string(what) + " gradient is not finite at " + e.name);
  }
}

}  // namespace

AdvantageEstimate compute_gae(std::span<const double> rewards, std::span<const double> values,
                              std::span<const std::uint8_t> dones, double bootstrap, double gamma, double gae_lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || dones.size() != n) {
    throw UsageError("compute_gae: length mismatch (rewards " + std::to_string(n) + ", values " +
                     std::to_string(values.size()) + ", dones " + std::to_string(dones.size()) + ")");
  }
  AdvantageEstimate out;
  out.advantages.resize(n);
  out.returns.resize(n);
  double next_adv = 0.0;
  double next_value = bootstrap;
  for (std::size_t i = n; i-- > 0;) {
    const double live = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * live - values[i];
    next_adv = delta + gamma * gae_lambda * live * next_adv;
    out.advantages[i] = next_adv;
    out.returns[i] = next_adv + values[i];
    next_value = values[i];
  }
  return out;
}

AdvantageEstimate compute_gae(const RolloutBatch& batch, double gamma, double gae_lambda) {
  const std::size_t n = batch.size();
  if (batch.rewards.size() != n || batch.values.size() != n || batch.dones.size() != n) {
    throw UsageError("compute_gae: batch sequences differ in length");
  }
  AdvantageEstimate out;
  out.advantages.reserve(n);
  out.returns.reserve(n);
  std::size_t covered = 0;
  for (const auto& c : batch.chunks) {
    if (c.begin != covered || c.end < c.begin || c.end > n) throw UsageError("compute_gae: chunks do not tile the batch");
    const auto len = c.end - c.begin;
    auto part = compute_gae(std::span(batch.rewards).subspan(c.begin, len), std::span(batch.values).subspan(c.begin, len),
                            std::span(batch.dones).subspan(c.begin, len), c.bootstrap_value, gamma, gae_lambda);
    out.advantages.insert(out.advantages.end(), part.advantages.begin(), part.advantages.end());
    out.returns.insert(out.returns.end(), part.returns.begin(), part.returns.end());
    covered = c.end;
  }
  if (covered != n) throw UsageError("compute_gae: chunks do not tile the batch");
  return out;
}

void normalize_advantages(std::vector<double>& adv) {
  if (adv.empty()) return;
  const double n = static_cast<double>(adv.size());
  const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  for (double& a : adv) a = sd > 0.0 ? (a - mean) / sd : 0.0;
}

nn::Var ppo_surrogate(nn::Tape& tape, GaussianPolicy& policy, nn::Var inputs, const nn::Tensor& actions,
                      std::span<const double> old_log_probs, std::span<const double> advantages, double clip_ratio,
                      double entropy_coef, SurrogateStats* stats) {
  const std::size_t n = old_log_probs.size();
  if (advantages.size() != n || actions.rank() != 2 || actions.dim(0) != n) {
    throw UsageError("ppo_surrogate: minibatch sequences differ in length");
  }
  nn::Var mean = policy.mean(tape, inputs);
  nn::Var log_std = policy.log_std(tape);
  nn::Var logp = nn::gaussian_log_prob(mean, log_std, actions);
  nn::Var old = tape.constant(nn::Tensor({n}, std::vector<double>(old_log_probs.begin(), old_log_probs.end())));
  nn::Var adv = tape.constant(nn::Tensor({n}, std::vector<double>(advantages.begin(), advantages.end())));

  nn::Var ratio = nn::exp(logp - old);
  nn::Var unclipped = ratio * adv;
  nn::Var clipped = nn::clamp(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio) * adv;
  nn::Var surrogate = nn::mean(nn::minimum(unclipped, clipped));
  nn::Var entropy = nn::gaussian_entropy(log_std);
  nn::Var loss = -(surrogate + entropy_coef * entropy);

  if (stats != nullptr) {
    std::size_t clipped_count = 0;
    for (double r : ratio.value().data()) clipped_count += std::abs(r - 1.0) > clip_ratio ? 1 : 0;
    stats->surrogate = surrogate.value().item();
    stats->entropy = entropy.value().item();
    stats->clip_fraction = static_cast<double>(clipped_count) / static_cast<double>(n);
  }
  return loss;
}

nn::Tensor policy_inputs(const RolloutBatch& batch, PolicyMode mode, std::span<const std::size_t> rows) {
  if (mode == PolicyMode::kVision) {
    if (batch.observations.size() != batch.size()) throw UsageError("policy_inputs: batch has no frame observations");
    return stacks_to_tensor(batch.observations, rows);
  }
  const std::size_t p = batch.proprio_dim;
  std::vector<double> data(rows.size() * p);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto s = batch.state(rows[i]);
    std::copy(s.begin(), s.end(), data.begin() + i * p);
  }
  return nn::Tensor({rows.size(), p}, std::move(data));
}

PpoDiagnostics ppo_update(GaussianPolicy& policy, ValueNet& value, const RolloutBatch& batch,
                          const AdvantageEstimate& adv, const TrainConfig& cfg, nn::AdamState& policy_optimizer,
                          nn::AdamState& value_optimizer, Rng& rng) {
  const std::size_t n = batch.size();
  if (adv.advantages.size() != n || adv.returns.size() != n) throw UsageError("ppo_update: advantage length mismatch");
  if (cfg.minibatch == 0) throw UsageError("ppo_update: minibatch must be positive");
  const std::size_t a_dim = batch.action_dim;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  PpoDiagnostics diag;
  std::size_t steps = 0;
  for (std::size_t epoch = 0; epoch < cfg.ppo_epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t begin = 0; begin < n; begin += cfg.minibatch) {
      const std::size_t m = std::min(cfg.minibatch, n - begin);
      const std::span<const std::size_t> rows(order.data() + begin, m);

      const nn::Tensor inputs = policy_inputs(batch, policy.mode(), rows);
      std::vector<double> actions(m * a_dim), old(m), a(m), ret(m);
      for (std::size_t i = 0; i < m; ++i) {
        const auto act = batch.action(rows[i]);
        std::copy(act.begin(), act.end(), actions.begin() + i * a_dim);
        old[i] = batch.log_probs[rows[i]];
        a[i] = adv.advantages[rows[i]];
        ret[i] = adv.returns[rows[i]];
      }

      SurrogateStats stats;
      {
        nn::Tape tape;
        nn::Var loss = ppo_surrogate(tape, policy, tape.constant(inputs), nn::Tensor({m, a_dim}, std::move(actions)),
                                     old, a, cfg.clip_ratio, cfg.entropy_coef, &stats);
        if (!std::isfinite(loss.value().item())) throw NonFiniteError("policy loss is not finite");
        tape.backward(loss, policy.params());
        require_finite(policy.params(), "policy");
      }
      double value_loss = 0.0;
      {
        nn::Tape tape;
        nn::Var target = tape.constant(nn::Tensor({m}, std::move(ret)));
        nn::Var loss = nn::mean(nn::square(value.value(tape, tape.constant(inputs)) - target));
        value_loss = loss.value().item();
        if (!std::isfinite(value_loss)) throw NonFiniteError("value loss is not finite");
        tape.backward(loss, value.params());
        require_finite(value.params(), "value");
      }
      nn::adam_step(policy.params(), policy_optimizer);
      nn::adam_step(value.params(), value_optimizer);

      diag.policy_loss -= stats.surrogate;
      diag.value_loss += value_loss;
      diag.entropy += stats.entropy;
      diag.clip_fraction += stats.clip_fraction;
      ++steps;
    }
  }
  if (steps == 0) {
    // No update ran; still report the entropy of the current policy.
    diag.entropy = entropy(GaussianDist{std::vector<double>(a_dim, 0.0), policy.log_std()});
    return diag;
  }
  const double k = static_cast<double>(steps);
  diag.policy_loss /= k;
  diag.value_loss /= k;
  diag.entropy /= k;
  diag.clip_fraction /= k;
  return diag;
}

}  // namespace pifo::rl
