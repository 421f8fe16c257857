#include "pifo/agent/policy.hpp"

#include <cmath>
#include <numbers>

#include "pifo/errors.hpp"

namespace pifo {

namespace {

NetworkArch policy_arch(PolicyMode mode, std::size_t proprio_dim, std::size_t out, const std::string& prefix) {
  return mode == PolicyMode::kProprio ? NetworkArch::mlp(prefix, proprio_dim, out)
                                      : NetworkArch::frame_conv(prefix, out, nn::Activation::kRelu);
}

void require_layout(const NetworkArch& arch, const nn::ParamSet& params, std::string_view owner) {
  for (const auto& layer : arch.layers) {
    const nn::Dims w = layer.kind == nn::LayerSpec::Kind::kDense
                           ? nn::Dims{layer.out, layer.in}
                           : nn::Dims{layer.out, layer.in, layer.kernel, layer.kernel};
    if (!params.contains(layer.name + "/w") || params.at(layer.name + "/w").value.dims() != w ||
        !params.contains(layer.name + "/b") || params.at(layer.name + "/b").value.dims() != nn::Dims{layer.out}) {
      throw ConfigError(std::string(owner) + ": parameters do not match layer '" + layer.name + "'");
    }
  }
}

}  // namespace

PolicyMode parse_policy_mode(std::string_view mode) {
  if (mode == "proprio") return PolicyMode::kProprio;
  if (mode == "vision") return PolicyMode::kVision;
  throw UsageError("unknown mode '" + std::string(mode) + "' (expected one of {proprio, vision})");
}

std::string_view to_string(PolicyMode mode) { return mode == PolicyMode::kProprio ? "proprio" : "vision"; }

GaussianPolicy::GaussianPolicy(PolicyMode mode, std::size_t proprio_dim, std::size_t action_dim, std::uint64_t seed)
    : mode_(mode),
      proprio_dim_(proprio_dim),
      action_dim_(action_dim),
      arch_(policy_arch(mode, proprio_dim, action_dim, "policy/")) {
  nn::append_params(params_, arch_.layers, seed);
  params_.add("policy/log_std", nn::Tensor({action_dim}, kInitialLogStd));
}

GaussianPolicy::GaussianPolicy(PolicyMode mode, std::size_t proprio_dim, std::size_t action_dim,
                               nn::ParamSet params)
    : mode_(mode),
      proprio_dim_(proprio_dim),
      action_dim_(action_dim),
      arch_(policy_arch(mode, proprio_dim, action_dim, "policy/")),
      params_(std::move(params)) {
  require_layout(arch_, params_, "policy");
  if (!params_.contains("policy/log_std") || params_.at("policy/log_std").value.dims() != nn::Dims{action_dim}) {
    throw ConfigError("policy: missing or mis-sized policy/log_std");
  }
}

nn::Tensor GaussianPolicy::means(const nn::Tensor& inputs) const { return network_forward(arch_, params_, inputs); }

std::vector<double> GaussianPolicy::log_std() const { return params_.at("policy/log_std").value.values(); }

nn::Var GaussianPolicy::mean(nn::Tape& tape, nn::Var inputs) { return network_forward(arch_, tape, params_, inputs); }

nn::Var GaussianPolicy::log_std(nn::Tape& tape) { return tape.param(params_, "policy/log_std"); }

ValueNet::ValueNet(PolicyMode mode, std::size_t proprio_dim, std::uint64_t seed)
    : mode_(mode), arch_(policy_arch(mode, proprio_dim, 1, "value/")) {
  nn::append_params(params_, arch_.layers, seed);
}

ValueNet::ValueNet(PolicyMode mode, std::size_t proprio_dim, nn::ParamSet params)
    : mode_(mode), arch_(policy_arch(mode, proprio_dim, 1, "value/")), params_(std::move(params)) {
  require_layout(arch_, params_, "value");
}

std::vector<double> ValueNet::values(const nn::Tensor& inputs) const {
  return network_forward(arch_, params_, inputs).values();
}

nn::Var ValueNet::value(nn::Tape& tape, nn::Var inputs) {
  nn::Var out = network_forward(arch_, tape, params_, inputs);
  return nn::reshape(out, {out.dims()[0]});
}

nn::Tensor proprio_tensor(std::span<const double> proprio) {
  return nn::Tensor({1, proprio.size()}, std::vector<double>(proprio.begin(), proprio.end()));
}

GaussianDist policy_forward(const GaussianPolicy& policy, std::span<const double> proprio) {
  if (policy.mode() != PolicyMode::kProprio) throw UsageError("vision policy given a proprioceptive state");
  if (proprio.size() != policy.proprio_dim()) {
    throw UsageError("policy expects " + std::to_string(policy.proprio_dim()) + " state components, got " +
                     std::to_string(proprio.size()));
  }
  return {policy.means(proprio_tensor(proprio)).values(), policy.log_std()};
}

GaussianDist policy_forward(const GaussianPolicy& policy, const FrameStack& stack) {
  if (policy.mode() != PolicyMode::kVision) throw UsageError("proprioceptive policy given a frame stack");
  return {policy.means(stacks_to_tensor(std::span(&stack, 1))).values(), policy.log_std()};
}

std::vector<double> sample_action(const GaussianDist& dist, Rng& rng) {
  std::vector<double> a(dist.mean.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double z = rng.normal();
    const double sigma = std::exp(dist.log_std[i]);
    a[i] = sigma == 0.0 ? dist.mean[i] : dist.mean[i] + sigma * z;
  }
  return a;
}

double log_prob(const GaussianDist& dist, std::span<const double> action) {
  if (action.size() != dist.mean.size()) throw UsageError("log_prob: action dimension mismatch");
  // Same summation order as nn::gaussian_log_prob.
  double acc = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double z = (action[i] - dist.mean[i]) / std::exp(dist.log_std[i]);
    acc += -0.5 * z * z - dist.log_std[i];
  }
  return acc - 0.5 * static_cast<double>(action.size()) * std::log(2.0 * std::numbers::pi);
}

double entropy(const GaussianDist& dist) {
  const double per_dim = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  double h = 0.0;
  for (double ls : dist.log_std) h += ls + per_dim;
  return h;
}

}  // namespace pifo
