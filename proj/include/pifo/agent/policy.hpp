#ifndef PIFO_AGENT_POLICY_HPP_
#define PIFO_AGENT_POLICY_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pifo/agent/frame_stack.hpp"
#include "pifo/agent/network.hpp"
#include "pifo/env/env.hpp"
#include "pifo/nn/autodiff.hpp"
#include "pifo/nn/tensor.hpp"
#include "pifo/rng.hpp"

namespace pifo {

enum class PolicyMode { kProprio, kVision };

// Throws UsageError listing {proprio, vision}.
PolicyMode parse_policy_mode(std::string_view mode);
std::string_view to_string(PolicyMode mode);

inline constexpr double kInitialLogStd = -0.5;

// Diagonal Gaussian over actions. `log_std` may be -inf per dimension (std 0).
struct GaussianDist {
  std::vector<double> mean;
  std::vector<double> log_std;
};

// pi(a | input) = N(mean(input), diag(exp(log_std))^2); log_std is a free
// parameter, not a function of the input. Entries are named "policy/...".
class GaussianPolicy {
 public:
  GaussianPolicy(PolicyMode mode, std::size_t proprio_dim, std::size_t action_dim, std::uint64_t seed);
  GaussianPolicy(PolicyMode mode, const env::EnvSpec& spec, std::uint64_t seed)
      : GaussianPolicy(mode, spec.proprio_dim, spec.action_dim, seed) {}
  // Adopts existing parameters (e.g. from a checkpoint); dims are validated.
  GaussianPolicy(PolicyMode mode, std::size_t proprio_dim, std::size_t action_dim, nn::ParamSet params);

  PolicyMode mode() const noexcept { return mode_; }
  std::size_t proprio_dim() const noexcept { return proprio_dim_; }
  std::size_t action_dim() const noexcept { return action_dim_; }
  const NetworkArch& arch() const noexcept { return arch_; }
  nn::ParamSet& params() noexcept { return params_; }
  const nn::ParamSet& params() const noexcept { return params_; }

  // Batched means [B, action_dim] for proprio [B, p] or stack [B, 4, 64, 64] inputs.
  nn::Tensor means(const nn::Tensor& inputs) const;
  std::vector<double> log_std() const;

  nn::Var mean(nn::Tape& tape, nn::Var inputs);
  nn::Var log_std(nn::Tape& tape);

 private:
  PolicyMode mode_;
  std::size_t proprio_dim_;
  std::size_t action_dim_;
  NetworkArch arch_;
  nn::ParamSet params_;
};

// State-value estimate with the same trunk family as the paired policy.
// Entries are named "value/...".
class ValueNet {
 public:
  ValueNet(PolicyMode mode, std::size_t proprio_dim, std::uint64_t seed);
  ValueNet(PolicyMode mode, std::size_t proprio_dim, nn::ParamSet params);

  PolicyMode mode() const noexcept { return mode_; }
  const NetworkArch& arch() const noexcept { return arch_; }
  nn::ParamSet& params() noexcept { return params_; }
  const nn::ParamSet& params() const noexcept { return params_; }

  std::vector<double> values(const nn::Tensor& inputs) const;
  nn::Var value(nn::Tape& tape, nn::Var inputs);  // [B]

 private:
  PolicyMode mode_;
  NetworkArch arch_;
  nn::ParamSet params_;
};

GaussianDist policy_forward(const GaussianPolicy& policy, std::span<const double> proprio);
GaussianDist policy_forward(const GaussianPolicy& policy, const FrameStack& stack);

// a = mean + exp(log_std) * z with z ~ N(0, I).
std::vector<double> sample_action(const GaussianDist& dist, Rng& rng);
double log_prob(const GaussianDist& dist, std::span<const double> action);
double entropy(const GaussianDist& dist);

// Single-sample input tensors ([1, p] or [1, 4, 64, 64]).
nn::Tensor proprio_tensor(std::span<const double> proprio);

}  // namespace pifo

#endif  // PIFO_AGENT_POLICY_HPP_
