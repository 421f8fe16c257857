#include "pifo/agent/network.hpp"

#include <algorithm>

#include "pifo/env/env.hpp"
#include "pifo/errors.hpp"

namespace pifo {

NetworkArch NetworkArch::mlp(const std::string& prefix, std::size_t in, std::size_t out) {
  NetworkArch arch;
  arch.layers = {nn::LayerSpec::dense(prefix + "l0", in, 64), nn::LayerSpec::dense(prefix + "l1", 64, 64),
                 nn::LayerSpec::dense(prefix + "l2", 64, out)};
  arch.hidden = nn::Activation::kTanh;
  arch.sample_dims = {in};
  return arch;
}

NetworkArch NetworkArch::frame_conv(const std::string& prefix, std::size_t out, nn::Activation hidden) {
  // 64 -> (64-8)/4+1 = 15 -> (15-4)/2+1 = 6
  NetworkArch arch;
  arch.layers = {nn::LayerSpec::conv(prefix + "c0", 4, 8, 8), nn::LayerSpec::conv(prefix + "c1", 8, 16, 4),
                 nn::LayerSpec::dense(prefix + "l0", 16 * 6 * 6, 64), nn::LayerSpec::dense(prefix + "l1", 64, out)};
  arch.strides = {4, 2};
  arch.hidden = hidden;
  arch.sample_dims = {4, env::kFrameSide, env::kFrameSide};
  return arch;
}

void check_network_input(const NetworkArch& arch, const nn::Tensor& inputs) {
  const auto& d = inputs.dims();
  if (d.size() != arch.sample_dims.size() + 1 || !std::equal(arch.sample_dims.begin(), arch.sample_dims.end(), d.begin() + 1)) {
    throw UsageError("network expects per-sample input " + nn::to_string(arch.sample_dims) + ", got batch " +
                     nn::to_string(d));
  }
}

nn::Tensor network_forward(const NetworkArch& arch, const nn::ParamSet& params, const nn::Tensor& inputs) {
  check_network_input(arch, inputs);
  const std::size_t batch = inputs.dim(0);
  nn::Tensor h = inputs;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& layer = arch.layers[i];
    const auto& w = params.at(layer.name + "/w").value;
    const auto& b = params.at(layer.name + "/b").value;
    if (i < arch.conv_layers()) {
      h = nn::conv2d_forward(h, w, b, arch.strides[i]);
    } else {
      if (h.rank() != 2) h = h.reshaped({batch, h.size() / batch});
      h = nn::dense_forward(h, w, b);
    }
    if (i + 1 < arch.layers.size()) h = nn::activation_forward(h, arch.hidden);
  }
  return h;
}

nn::Var network_forward(const NetworkArch& arch, nn::Tape& tape, nn::ParamSet& params, nn::Var inputs) {
  check_network_input(arch, inputs.value());
  const std::size_t batch = inputs.dims()[0];
  nn::Var h = inputs;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& layer = arch.layers[i];
    nn::Var w = tape.param(params, layer.name + "/w");
    nn::Var b = tape.param(params, layer.name + "/b");
    if (i < arch.conv_layers()) {
      h = nn::conv2d(h, w, b, arch.strides[i]);
    } else {
      if (h.dims().size() != 2) h = nn::reshape(h, {batch, h.value().size() / batch});
      h = nn::dense(h, w, b);
    }
    if (i + 1 < arch.layers.size()) h = nn::activation(h, arch.hidden);
  }
  return h;
}

}  // namespace pifo
