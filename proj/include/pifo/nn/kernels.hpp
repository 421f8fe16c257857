#ifndef PIFO_NN_KERNELS_HPP_
#define PIFO_NN_KERNELS_HPP_

#include <cstddef>
#include <string_view>
#include <vector>

#include "pifo/nn/tensor.hpp"

namespace pifo::nn {

enum class Activation { kTanh, kRelu, kSigmoid };

std::string_view to_string(Activation kind);

// y[b,o] = sum_i weights[o,i] * x[b,i] + bias[o]
Tensor dense_forward(const Tensor& x, const Tensor& weights, const Tensor& bias);

// Accumulates (+=) into every non-null gradient output.
void dense_backward(const Tensor& x, const Tensor& weights, const Tensor& grad_out, Tensor* grad_x, Tensor* grad_w,
                    Tensor* grad_b);

// Extents of a valid (unpadded) square-kernel cross-correlation.
struct ConvGeometry {
  std::size_t batch = 0;
  std::size_t in_channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t out_height = 0;
  std::size_t out_width = 0;

  // Validates x [B,C,H,W] against kernel [Co,C,k,k]; throws ShapeError.
  static ConvGeometry of(const Dims& x, const Dims& kernel, std::size_t stride);

  std::size_t patch() const { return in_channels * kernel * kernel; }
  std::size_t positions() const { return out_height * out_width; }
  // Samples unrolled at a time by the blocked forward and backward passes.
  std::size_t block() const;
};

// Unrolled input patches of samples [first, first + count), laid out
// [patch, count * positions], written to `out`.
void im2col(const Tensor& x, const ConvGeometry& g, std::size_t first, std::size_t count, double* out);
Buffer im2col(const Tensor& x, const ConvGeometry& g);

Tensor conv2d_forward(const Tensor& x, const Tensor& kernel, const Tensor& bias, std::size_t stride);

// Accumulates (+=) into every non-null gradient output. Patches are unrolled
// again block by block rather than kept from the forward pass.
void conv2d_backward(const Tensor& x, const Tensor& kernel, const Tensor& grad_out, std::size_t stride, Tensor* grad_x,
                     Tensor* grad_k, Tensor* grad_b);

Tensor activation_forward(const Tensor& x, Activation kind);

// Gradient w.r.t. the activation input, given its output `y`.
Tensor activation_backward(const Tensor& x, const Tensor& y, const Tensor& grad_out, Activation kind);

}  // namespace pifo::nn

#endif  // PIFO_NN_KERNELS_HPP_
