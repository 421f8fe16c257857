#include "pifo/nn/init.hpp"

#include <cmath>

#include "pifo/rng.hpp"

namespace pifo::nn {

void append_params(ParamSet& params, std::span<const LayerSpec> layers, std::uint64_t seed) {
  Rng rng(seed);
  for (const auto& layer : layers) {
    Dims wdims = layer.kind == LayerSpec::Kind::kDense ? Dims{layer.out, layer.in}
                                                       : Dims{layer.out, layer.in, layer.kernel, layer.kernel};
    const double bound = std::sqrt(1.0 / static_cast<double>(layer.fan_in()));
    Tensor w(std::move(wdims));
    for (auto& v : w.data()) v = static_cast<double>(static_cast<float>(rng.uniform(-bound, bound)));
    params.add(layer.name + "/w", std::move(w));
    params.add(layer.name + "/b", Tensor({layer.out}));
  }
}

ParamSet init_params(std::span<const LayerSpec> layers, std::uint64_t seed) {
  ParamSet params;
  append_params(params, layers, seed);
  return params;
}

}  // namespace pifo::nn
