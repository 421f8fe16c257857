#ifndef PIFO_AGENT_DISCRIMINATOR_HPP_
#define PIFO_AGENT_DISCRIMINATOR_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pifo/agent/frame_stack.hpp"
#include "pifo/agent/network.hpp"
#include "pifo/nn/adam.hpp"
#include "pifo/nn/autodiff.hpp"
#include "pifo/rng.hpp"

namespace pifo {

// Probabilities are clamped to this range wherever they feed a loss or reward.
inline constexpr double kProbFloor = 1e-6;
inline constexpr double kProbCeil = 1.0 - 1e-6;

// D(stack) -> probability that the stack came from the imitator (label 1);
// expert stacks are labelled 0. Entries are named "disc/...".
//
// 4x64x64 -> conv(8, 8x8, /4) -> relu -> conv(16, 4x4, /2) -> relu
//         -> dense 64 -> relu -> dense 1 -> sigmoid
class Discriminator {
 public:
  explicit Discriminator(std::uint64_t seed);
  explicit Discriminator(nn::ParamSet params);

  const NetworkArch& arch() const noexcept { return arch_; }
  nn::ParamSet& params() noexcept { return params_; }
  const nn::ParamSet& params() const noexcept { return params_; }

  // Clamped probabilities, evaluated in chunks to bound memory.
  std::vector<double> probabilities(std::span<const FrameStack> stacks) const;
  // Clamped probabilities [B] for stacks [B, 4, 64, 64].
  nn::Var probability(nn::Tape& tape, nn::Var stacks);

 private:
  NetworkArch arch_;
  nn::ParamSet params_;
};

double disc_forward(const Discriminator& disc, const FrameStack& stack);

// -( mean log D(imitator) + mean log(1 - D(expert)) ), inputs already clamped.
nn::Var disc_loss(nn::Var d_imitator, nn::Var d_expert);
double disc_loss(std::span<const double> d_imitator, std::span<const double> d_expert);

// r = -log D, with D clamped. Larger when the stack looks expert-like.
double reward_from_probability(double d);
double reward_from_discriminator(const Discriminator& disc, const FrameStack& stack);
std::vector<double> rewards_from_discriminator(const Discriminator& disc, std::span<const FrameStack> stacks);

struct DiscDiagnostics {
  double loss = 0.0;
  double mean_d_imitator = 0.0;
  double mean_d_expert = 0.0;
};

// `epochs` passes of shuffled minibatch Adam on disc_loss. Each minibatch pairs
// `minibatch` imitator stacks with as many expert stacks. Diagnostics average the
// pre-update values over all minibatches; with epochs == 0 nothing is updated and
// they are computed over the full batches.
DiscDiagnostics disc_update(Discriminator& disc, std::span<const FrameStack> imitator,
                            std::span<const FrameStack> expert, nn::AdamState& optimizer, std::size_t minibatch,
                            std::size_t epochs, Rng& rng);

}  // namespace pifo

#endif  // PIFO_AGENT_DISCRIMINATOR_HPP_
