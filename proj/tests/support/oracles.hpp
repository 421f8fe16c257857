#ifndef PIFO_TESTS_ORACLES_HPP_
#define PIFO_TESTS_ORACLES_HPP_

// Independent reference computations shared by the unit tests and the
// acceptance binary. Nothing here calls the code path it is checking.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pifo/nn/autodiff.hpp"
#include "pifo/nn/tensor.hpp"
#include "pifo/rl/ppo.hpp"
#include "pifo/rng.hpp"

namespace pifo::oracle {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdTolerance = 1e-4;
// Denominator floor of the relative error: components smaller than this are
// compared on an absolute scale of kFdTolerance * kFdFloor.
inline constexpr double kFdFloor = 1e-6;

double relative_error(double analytic, double numeric);

nn::Tensor random_tensor(const nn::Dims& dims, Rng& rng, double lo = -1.0, double hi = 1.0);
// Multiples of 1/8 in [-2, 2]; a fraction `zeros` of the entries is exactly 0.
nn::Tensor dyadic_tensor(const nn::Dims& dims, Rng& rng, double zeros = 0.0);

using LossFn = std::function<nn::Var(nn::Tape&, nn::ParamSet&)>;

struct GradCheck {
  double worst = 0.0;  // largest relative error seen
  std::size_t components = 0;
};

// Central differences against tape gradients for the entries of `leaves`.
// With `per_entry` > 0 only that many randomly picked components of each entry
// are perturbed.
GradCheck check_gradients(nn::ParamSet& leaves, const LossFn& loss, std::size_t per_entry = 0, Rng* pick = nullptr);

struct SuiteResult {
  std::string op;
  std::size_t instances = 0;
  std::size_t components = 0;
  double worst = 0.0;
};

// Finite-difference suites for dense, conv2d, tanh, relu, sigmoid,
// gaussian_log_prob, gaussian_entropy, disc_loss, the discriminator network
// and the PPO surrogate.
std::vector<SuiteResult> gradient_suites(std::size_t instances, std::uint64_t seed);

// Direct sliding-window cross-correlation.
nn::Tensor conv2d_naive(const nn::Tensor& x, const nn::Tensor& kernel, const nn::Tensor& bias, std::size_t stride);

// A[t] as the explicit sum over (gamma*lambda)^l * delta[t+l] up to the end of
// the episode, without the backward recursion.
rl::AdvantageEstimate gae_brute(std::span<const double> rewards, std::span<const double> values,
                                std::span<const std::uint8_t> dones, double bootstrap, double gamma, double gae_lambda);

struct RatioOneResult {
  double max_grad_diff = 0.0;   // tape gradient vs. hand backprop
  double max_delta_diff = 0.0;  // parameter change vs. hand Adam step
  std::size_t parameters = 0;
};

// One ppo_update with clip_ratio = inf, a single epoch and a single full-batch
// minibatch on a proprio cartpole rollout, against a hand-written backward
// pass of the MLP policy and the first-step Adam formula.
RatioOneResult ratio_one_ppo_step(std::uint64_t seed);

}  // namespace pifo::oracle

#endif  // PIFO_TESTS_ORACLES_HPP_
