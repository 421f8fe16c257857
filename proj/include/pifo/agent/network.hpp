#ifndef PIFO_AGENT_NETWORK_HPP_
#define PIFO_AGENT_NETWORK_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "pifo/nn/autodiff.hpp"
#include "pifo/nn/init.hpp"
#include "pifo/nn/tensor.hpp"

namespace pifo {

// Feed-forward stack: optional strided conv layers, a flatten, then dense
// layers. The hidden activation follows every layer except the last.
struct NetworkArch {
  std::vector<nn::LayerSpec> layers;
  std::vector<std::size_t> strides;  // one per conv layer, conv layers come first
  nn::Activation hidden = nn::Activation::kTanh;
  nn::Dims sample_dims;  // per-sample input extents

  std::size_t conv_layers() const { return strides.size(); }
  std::size_t output_dim() const { return layers.back().out; }

  // dense in -> 64 -> 64 -> out, tanh
  static NetworkArch mlp(const std::string& prefix, std::size_t in, std::size_t out);
  // 4x64x64 -> conv(8, 8x8, /4) -> conv(16, 4x4, /2) -> dense 64 -> out
  static NetworkArch frame_conv(const std::string& prefix, std::size_t out, nn::Activation hidden);
};

// Batched inference without recording: inputs [B, sample_dims...] -> [B, out].
nn::Tensor network_forward(const NetworkArch& arch, const nn::ParamSet& params, const nn::Tensor& inputs);

// Same computation recorded on a tape.
nn::Var network_forward(const NetworkArch& arch, nn::Tape& tape, nn::ParamSet& params, nn::Var inputs);

// Dims check of a batch against the arch; throws UsageError on mismatch.
void check_network_input(const NetworkArch& arch, const nn::Tensor& inputs);

}  // namespace pifo

#endif  // PIFO_AGENT_NETWORK_HPP_
