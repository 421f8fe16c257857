#ifndef PIFO_NN_INIT_HPP_
#define PIFO_NN_INIT_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

#include "pifo/nn/tensor.hpp"

namespace pifo::nn {

struct LayerSpec {
  enum class Kind { kDense, kConv };

  std::string name;  // entries become "<name>/w" and "<name>/b"
  Kind kind = Kind::kDense;
  std::size_t in = 0;      // input features or input channels
  std::size_t out = 0;     // output features or output channels
  std::size_t kernel = 1;  // conv only

  static LayerSpec dense(std::string name, std::size_t in, std::size_t out) {
    return {std::move(name), Kind::kDense, in, out, 1};
  }
  static LayerSpec conv(std::string name, std::size_t in_ch, std::size_t out_ch, std::size_t kernel) {
    return {std::move(name), Kind::kConv, in_ch, out_ch, kernel};
  }

  std::size_t fan_in() const { return kind == Kind::kDense ? in : in * kernel * kernel; }
};

// Weights ~ U(-sqrt(1/fan_in), sqrt(1/fan_in)), biases zero. Every weight is
// rounded to the nearest float so an initialization survives the 32-bit
// checkpoint format unchanged.
ParamSet init_params(std::span<const LayerSpec> layers, std::uint64_t seed);

// Appends the layers of `layers` to an existing set, drawing from `seed`.
void append_params(ParamSet& params, std::span<const LayerSpec> layers, std::uint64_t seed);

}  // namespace pifo::nn

#endif  // PIFO_NN_INIT_HPP_
