#include "pifo/agent/discriminator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pifo/errors.hpp"

namespace pifo {

namespace {

constexpr std::size_t kEvalChunk = 64;

NetworkArch disc_arch() { return NetworkArch::frame_conv("disc/", 1, nn::Activation::kRelu); }

double mean_of(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

Discriminator::Discriminator(std::uint64_t seed) : arch_(disc_arch()) {
  nn::append_params(params_, arch_.layers, seed);
}

Discriminator::Discriminator(nn::ParamSet params) : arch_(disc_arch()), params_(std::move(params)) {
  for (const auto& layer : arch_.layers) {
    if (!params_.contains(layer.name + "/w") || !params_.contains(layer.name + "/b")) {
      throw ConfigError("discriminator: missing parameters for layer '" + layer.name + "'");
    }
  }
}

std::vector<double> Discriminator::probabilities(std::span<const FrameStack> stacks) const {
  std::vector<double> out;
  out.reserve(stacks.size());
  for (std::size_t begin = 0; begin < stacks.size(); begin += kEvalChunk) {
    const auto chunk = stacks.subspan(begin, std::min(kEvalChunk, stacks.size() - begin));
    const nn::Tensor logits = network_forward(arch_, params_, stacks_to_tensor(chunk));
    const nn::Tensor probs = nn::activation_forward(logits, nn::Activation::kSigmoid);
    for (double p : probs.data()) out.push_back(std::clamp(p, kProbFloor, kProbCeil));
  }
  return out;
}

nn::Var Discriminator::probability(nn::Tape& tape, nn::Var stacks) {
  nn::Var logits = network_forward(arch_, tape, params_, stacks);
  nn::Var probs = nn::clamp(nn::sigmoid(logits), kProbFloor, kProbCeil);
  return nn::reshape(probs, {probs.dims()[0]});
}

double disc_forward(const Discriminator& disc, const FrameStack& stack) {
  return disc.probabilities(std::span(&stack, 1)).front();
}

nn::Var disc_loss(nn::Var d_imitator, nn::Var d_expert) {
  if (d_imitator.value().size() == 0 || d_expert.value().size() == 0) throw UsageError("disc_loss: empty batch");
  nn::Var imitator_term = nn::mean(nn::log(d_imitator));
  nn::Var expert_term = nn::mean(nn::log(nn::add_scalar(nn::scale(d_expert, -1.0), 1.0)));
  return nn::scale(nn::add(imitator_term, expert_term), -1.0);
}

double disc_loss(std::span<const double> d_imitator, std::span<const double> d_expert) {
  if (d_imitator.empty() || d_expert.empty()) throw UsageError("disc_loss: empty batch");
  double imitator_term = 0.0;
  for (double d : d_imitator) imitator_term += std::log(d);
  double expert_term = 0.0;
  for (double d : d_expert) expert_term += std::log(1.0 - d);
  return -(imitator_term / static_cast<double>(d_imitator.size()) +
           expert_term / static_cast<double>(d_expert.size()));
}

double reward_from_probability(double d) { return -std::log(std::clamp(d, kProbFloor, kProbCeil)); }

double reward_from_discriminator(const Discriminator& disc, const FrameStack& stack) {
  return reward_from_probability(disc_forward(disc, stack));
}

std::vector<double> rewards_from_discriminator(const Discriminator& disc, std::span<const FrameStack> stacks) {
  auto probs = disc.probabilities(stacks);
  for (auto& p : probs) p = reward_from_probability(p);
  return probs;
}

DiscDiagnostics disc_update(Discriminator& disc, std::span<const FrameStack> imitator,
                            std::span<const FrameStack> expert, nn::AdamState& optimizer, std::size_t minibatch,
                            std::size_t epochs, Rng& rng) {
  if (imitator.empty() || expert.empty()) throw UsageError("disc_update: empty batch");
  if (minibatch == 0) throw UsageError("disc_update: minibatch must be positive");
  if (epochs == 0) {
    const auto di = disc.probabilities(imitator);
    const auto de = disc.probabilities(expert);
    return {disc_loss(di, de), mean_of(di), mean_of(de)};
  }
  if (imitator.size() < minibatch || expert.size() < minibatch) {
    throw UsageError("disc_update: batches (" + std::to_string(imitator.size()) + ", " +
                     std::to_string(expert.size()) + ") smaller than minibatch " + std::to_string(minibatch));
  }

  std::vector<std::size_t> imitator_order(imitator.size());
  std::vector<std::size_t> expert_order(expert.size());
  std::iota(imitator_order.begin(), imitator_order.end(), 0);
  std::iota(expert_order.begin(), expert_order.end(), 0);

  DiscDiagnostics diag;
  std::size_t steps = 0;
  const std::size_t per_epoch = imitator.size() / minibatch;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(std::span(imitator_order));
    rng.shuffle(std::span(expert_order));
    for (std::size_t k = 0; k < per_epoch; ++k) {
      std::vector<std::size_t> ii(imitator_order.begin() + k * minibatch, imitator_order.begin() + (k + 1) * minibatch);
      std::vector<std::size_t> ei(minibatch);
      for (std::size_t j = 0; j < minibatch; ++j) ei[j] = expert_order[(k * minibatch + j) % expert_order.size()];

      nn::Tape tape;
      nn::Var di = disc.probability(tape, tape.constant(stacks_to_tensor(imitator, ii)));
      nn::Var de = disc.probability(tape, tape.constant(stacks_to_tensor(expert, ei)));
      nn::Var loss = disc_loss(di, de);
      const double loss_value = loss.value().item();
      if (!std::isfinite(loss_value)) throw NonFiniteError("discriminator loss is not finite");
      diag.loss += loss_value;
      diag.mean_d_imitator += mean_of(di.value().data());
      diag.mean_d_expert += mean_of(de.value().data());
      ++steps;

      tape.backward(loss, disc.params());
      nn::adam_step(disc.params(), optimizer);
    }
  }
  const double n = static_cast<double>(steps);
  return {diag.loss / n, diag.mean_d_imitator / n, diag.mean_d_expert / n};
}

}  // namespace pifo
