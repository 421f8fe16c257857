#include "pifo/nn/kernels.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "pifo/errors.hpp"

namespace pifo::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using ConstRowVecMap = Eigen::Map<const Eigen::RowVectorXd>;
using RowVecMap = Eigen::Map<Eigen::RowVectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

void require_same_dims(const Tensor& a, const Tensor& b, std::string_view what) {
  if (a.dims() != b.dims()) {
    throw ShapeError(std::string(what) + ": " + to_string(a.dims()) + " vs " + to_string(b.dims()));
  }
}

void check_dense(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.rank() != 2 || w.rank() != 2 || b.rank() != 1 || x.dim(1) != w.dim(1) || b.dim(0) != w.dim(0)) {
    throw ShapeError("dense: x " + to_string(x.dims()) + " vs weights " + to_string(w.dims()) + " and bias " +
                     to_string(b.dims()));
  }
}

}  // namespace

std::string_view to_string(Activation kind) {
  switch (kind) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kSigmoid:
      return "sigmoid";
  }
  return "?";
}

Tensor dense_forward(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  check_dense(x, weights, bias);
  const auto batch = static_cast<Eigen::Index>(x.dim(0));
  const auto in = static_cast<Eigen::Index>(x.dim(1));
  const auto out = static_cast<Eigen::Index>(weights.dim(0));
  Tensor y({x.dim(0), weights.dim(0)});
  MatMap ym(y.raw(), batch, out);
  ym.noalias() = ConstMatMap(x.raw(), batch, in) * ConstMatMap(weights.raw(), out, in).transpose();
  ym.rowwise() += ConstRowVecMap(bias.raw(), out);
  return y;
}

void dense_backward(const Tensor& x, const Tensor& weights, const Tensor& grad_out, Tensor* grad_x, Tensor* grad_w,
                    Tensor* grad_b) {
  const auto batch = static_cast<Eigen::Index>(x.dim(0));
  const auto in = static_cast<Eigen::Index>(x.dim(1));
  const auto out = static_cast<Eigen::Index>(weights.dim(0));
  ConstMatMap dy(grad_out.raw(), batch, out);
  if (grad_w) MatMap(grad_w->raw(), out, in).noalias() += dy.transpose() * ConstMatMap(x.raw(), batch, in);
  if (grad_b) RowVecMap(grad_b->raw(), out) += dy.colwise().sum();
  if (grad_x) MatMap(grad_x->raw(), batch, in).noalias() += dy * ConstMatMap(weights.raw(), out, in);
}

ConvGeometry ConvGeometry::of(const Dims& x, const Dims& kernel, std::size_t stride) {
  if (x.size() != 4 || kernel.size() != 4 || kernel[1] != x[1] || kernel[2] != kernel[3]) {
    throw ShapeError("conv2d: input " + to_string(x) + " vs kernel " + to_string(kernel));
  }
  if (stride == 0) throw ShapeError("conv2d: stride must be positive");
  if (kernel[2] > x[2] || kernel[3] > x[3]) {
    throw ShapeError("conv2d: kernel " + to_string(kernel) + " larger than input " + to_string(x));
  }
  ConvGeometry g;
  g.batch = x[0];
  g.in_channels = x[1];
  g.height = x[2];
  g.width = x[3];
  g.out_channels = kernel[0];
  g.kernel = kernel[2];
  g.stride = stride;
  g.out_height = (g.height - g.kernel) / stride + 1;
  g.out_width = (g.width - g.kernel) / stride + 1;
  return g;
}

std::size_t ConvGeometry::block() const {
  // Samples per im2col block, sized to keep the unrolled patches cache-resident.
  constexpr std::size_t kBlockDoubles = std::size_t{1} << 16;
  return std::clamp<std::size_t>(kBlockDoubles / std::max<std::size_t>(1, patch() * positions()), 1, batch);
}

void im2col(const Tensor& x, const ConvGeometry& g, std::size_t first, std::size_t count, double* out) {
  const std::size_t cols = count * g.positions();
  const double* src = x.raw();
  for (std::size_t c = 0; c < g.in_channels; ++c) {
    for (std::size_t ki = 0; ki < g.kernel; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel; ++kj) {
        double* row = out + ((c * g.kernel + ki) * g.kernel + kj) * cols;
        for (std::size_t b = first; b < first + count; ++b) {
          const double* plane = src + (b * g.in_channels + c) * g.height * g.width;
          for (std::size_t oh = 0; oh < g.out_height; ++oh) {
            const double* line = plane + (oh * g.stride + ki) * g.width + kj;
            for (std::size_t ow = 0; ow < g.out_width; ++ow) *row++ = line[ow * g.stride];
          }
        }
      }
    }
  }
}

Buffer im2col(const Tensor& x, const ConvGeometry& g) {
  Buffer out(g.patch() * g.batch * g.positions());
  im2col(x, g, 0, g.batch, out.data());
  return out;
}

namespace {

// Inputs at most this dense take the scatter path (rendered frames are ~5% on).
constexpr double kSparseDensity = 0.2;

bool sparse_enough(const Tensor& x) {
  std::size_t nnz = 0;
  for (double v : x.data()) nnz += v != 0.0 ? 1 : 0;
  return static_cast<double>(nnz) <= kSparseDensity * static_cast<double>(x.size());
}

// Output positions (o, k) with o * stride + k == r, for one spatial axis.
template <typename Fn>
void for_each_cover(std::size_t r, std::size_t kernel, std::size_t stride, std::size_t out_extent, Fn&& fn) {
  const std::size_t k_lo = r + 1 > out_extent * stride ? r - (out_extent - 1) * stride : 0;
  for (std::size_t k = k_lo + (r - k_lo) % stride; k < kernel && k <= r; k += stride) fn((r - k) / stride, k);
}

// kernel [Co, C, k, k] -> [C, k, k, Co]
Buffer channels_last(const Tensor& kernel, const ConvGeometry& g) {
  const std::size_t patch = g.patch();
  Buffer out(patch * g.out_channels);
  for (std::size_t co = 0; co < g.out_channels; ++co) {
    for (std::size_t q = 0; q < patch; ++q) out[q * g.out_channels + co] = kernel[co * patch + q];
  }
  return out;
}

// Scatters every nonzero input pixel into the outputs it feeds.
void sparse_forward(const Tensor& x, const Tensor& kernel, const ConvGeometry& g, Tensor& y) {
  const Buffer kt = channels_last(kernel, g);
  const std::size_t co_n = g.out_channels;
  const std::size_t p = g.positions();
  Buffer acc(p * co_n);  // [P, Co]
  for (std::size_t b = 0; b < g.batch; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      const double* plane = x.raw() + (b * g.in_channels + c) * g.height * g.width;
      for (std::size_t r = 0; r < g.height; ++r) {
        for (std::size_t col = 0; col < g.width; ++col) {
          const double v = plane[r * g.width + col];
          if (v == 0.0) continue;
          for_each_cover(r, g.kernel, g.stride, g.out_height, [&](std::size_t oh, std::size_t ki) {
            for_each_cover(col, g.kernel, g.stride, g.out_width, [&](std::size_t ow, std::size_t kj) {
              const double* kv = kt.data() + ((c * g.kernel + ki) * g.kernel + kj) * co_n;
              double* out = acc.data() + (oh * g.out_width + ow) * co_n;
              for (std::size_t co = 0; co < co_n; ++co) out[co] += kv[co] * v;
            });
          });
        }
      }
    }
    double* dst = y.raw() + b * co_n * p;
    for (std::size_t co = 0; co < co_n; ++co) {
      for (std::size_t i = 0; i < p; ++i) dst[co * p + i] = acc[i * co_n + co];
    }
  }
}

// grad_k += sum over nonzero input pixels of dout * x.
void sparse_kernel_grad(const Tensor& x, const Tensor& grad_out, const ConvGeometry& g, Tensor& grad_k) {
  const std::size_t co_n = g.out_channels;
  const std::size_t p = g.positions();
  const std::size_t patch = g.patch();
  Buffer gt(patch * co_n, 0.0);  // [C, k, k, Co]
  Buffer dt(p * co_n);           // [P, Co] of one sample
  for (std::size_t b = 0; b < g.batch; ++b) {
    const double* d = grad_out.raw() + b * co_n * p;
    for (std::size_t co = 0; co < co_n; ++co) {
      for (std::size_t i = 0; i < p; ++i) dt[i * co_n + co] = d[co * p + i];
    }
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      const double* plane = x.raw() + (b * g.in_channels + c) * g.height * g.width;
      for (std::size_t r = 0; r < g.height; ++r) {
        for (std::size_t col = 0; col < g.width; ++col) {
          const double v = plane[r * g.width + col];
          if (v == 0.0) continue;
          for_each_cover(r, g.kernel, g.stride, g.out_height, [&](std::size_t oh, std::size_t ki) {
            for_each_cover(col, g.kernel, g.stride, g.out_width, [&](std::size_t ow, std::size_t kj) {
              double* gv = gt.data() + ((c * g.kernel + ki) * g.kernel + kj) * co_n;
              const double* dv = dt.data() + (oh * g.out_width + ow) * co_n;
              for (std::size_t co = 0; co < co_n; ++co) gv[co] += dv[co] * v;
            });
          });
        }
      }
    }
  }
  for (std::size_t co = 0; co < co_n; ++co) {
    for (std::size_t q = 0; q < patch; ++q) grad_k[co * patch + q] += gt[q * co_n + co];
  }
}

}  // namespace

Tensor conv2d_forward(const Tensor& x, const Tensor& kernel, const Tensor& bias, std::size_t stride) {
  const auto g = ConvGeometry::of(x.dims(), kernel.dims(), stride);
  if (bias.rank() != 1 || bias.dim(0) != g.out_channels) {
    throw ShapeError("conv2d: bias " + to_string(bias.dims()) + " vs kernel " + to_string(kernel.dims()));
  }
  const auto co = static_cast<Eigen::Index>(g.out_channels);
  const auto patch = static_cast<Eigen::Index>(g.patch());
  const std::size_t p = g.positions();
  const std::size_t block = g.block();
  const ConstMatMap k(kernel.raw(), co, patch);

  Tensor y({g.batch, g.out_channels, g.out_height, g.out_width});
  if (sparse_enough(x)) {
    sparse_forward(x, kernel, g, y);
    double* dst = y.raw();
    for (std::size_t b = 0; b < g.batch; ++b) {
      for (std::size_t c = 0; c < g.out_channels; ++c) {
        for (std::size_t i = 0; i < p; ++i) *dst++ += bias[c];
      }
    }
    return y;
  }
  Buffer columns(g.patch() * block * p);
  RowMat prod(co, static_cast<Eigen::Index>(block * p));
  for (std::size_t b0 = 0; b0 < g.batch; b0 += block) {
    const std::size_t nb = std::min(block, g.batch - b0);
    const auto cols = static_cast<Eigen::Index>(nb * p);
    im2col(x, g, b0, nb, columns.data());
    auto out = prod.leftCols(cols);
    out.noalias() = k * ConstMatMap(columns.data(), patch, cols);
    for (std::size_t b = 0; b < nb; ++b) {
      double* dst = y.raw() + (b0 + b) * g.out_channels * p;
      for (std::size_t c = 0; c < g.out_channels; ++c) {
        const double* src = prod.data() + c * prod.cols() + b * p;
        for (std::size_t i = 0; i < p; ++i) *dst++ = src[i] + bias[c];
      }
    }
  }
  return y;
}

void conv2d_backward(const Tensor& x, const Tensor& kernel, const Tensor& grad_out, std::size_t stride, Tensor* grad_x,
                     Tensor* grad_k, Tensor* grad_b) {
  const auto g = ConvGeometry::of(x.dims(), kernel.dims(), stride);
  const auto co = static_cast<Eigen::Index>(g.out_channels);
  const auto patch = static_cast<Eigen::Index>(g.patch());
  const std::size_t p = g.positions();
  const std::size_t block = g.block();
  const ConstMatMap k(kernel.raw(), co, patch);

  const bool sparse = grad_k != nullptr && sparse_enough(x);
  if (sparse) {
    sparse_kernel_grad(x, grad_out, g, *grad_k);
    grad_k = nullptr;
  }
  Buffer columns(grad_k ? g.patch() * block * p : 0);
  RowMat dout(co, static_cast<Eigen::Index>(block * p));
  RowMat dcols(patch, static_cast<Eigen::Index>(block * p));
  for (std::size_t b0 = 0; b0 < g.batch; b0 += block) {
    const std::size_t nb = std::min(block, g.batch - b0);
    const std::size_t cols = nb * p;
    const auto ecols = static_cast<Eigen::Index>(cols);

    // [nb, Co, P] -> [Co, nb * P]
    const double* src = grad_out.raw() + b0 * g.out_channels * p;
    for (std::size_t b = 0; b < nb; ++b) {
      for (std::size_t c = 0; c < g.out_channels; ++c) {
        double* row = dout.data() + c * dout.cols() + b * p;
        for (std::size_t i = 0; i < p; ++i) row[i] = *src++;
      }
    }
    auto d = dout.leftCols(ecols);
    if (grad_b) VecMap(grad_b->raw(), co) += d.rowwise().sum();
    if (grad_k) {
      im2col(x, g, b0, nb, columns.data());
      MatMap(grad_k->raw(), co, patch).noalias() += d * ConstMatMap(columns.data(), patch, ecols).transpose();
    }
    if (!grad_x) continue;

    auto dc = dcols.leftCols(ecols);
    dc.noalias() = k.transpose() * d;
    double* dx = grad_x->raw();
    for (std::size_t c = 0; c < g.in_channels; ++c) {
      for (std::size_t ki = 0; ki < g.kernel; ++ki) {
        for (std::size_t kj = 0; kj < g.kernel; ++kj) {
          const double* row = dcols.data() + ((c * g.kernel + ki) * g.kernel + kj) * dcols.cols();
          for (std::size_t b = b0; b < b0 + nb; ++b) {
            double* plane = dx + (b * g.in_channels + c) * g.height * g.width;
            for (std::size_t oh = 0; oh < g.out_height; ++oh) {
              double* line = plane + (oh * g.stride + ki) * g.width + kj;
              for (std::size_t ow = 0; ow < g.out_width; ++ow) line[ow * g.stride] += *row++;
            }
          }
        }
      }
    }
  }
}

Tensor activation_forward(const Tensor& x, Activation kind) {
  Tensor y = x;
  auto d = y.data();
  switch (kind) {
    case Activation::kTanh:
      for (auto& v : d) v = std::tanh(v);
      break;
    case Activation::kRelu:
      for (auto& v : d) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::kSigmoid:
      // Kept strictly inside (0, 1) even where the exact value rounds to 0 or 1.
      for (auto& v : d) {
        const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
        v = std::clamp(s, std::numeric_limits<double>::denorm_min(), std::nextafter(1.0, 0.0));
      }
      break;
  }
  return y;
}

Tensor activation_backward(const Tensor& x, const Tensor& y, const Tensor& grad_out, Activation kind) {
  require_same_dims(x, grad_out, "activation backward");
  Tensor gx(x.dims());
  const std::size_t n = x.size();
  switch (kind) {
    case Activation::kTanh:
      for (std::size_t i = 0; i < n; ++i) gx[i] = grad_out[i] * (1.0 - y[i] * y[i]);
      break;
    case Activation::kRelu:
      for (std::size_t i = 0; i < n; ++i) gx[i] = x[i] > 0.0 ? grad_out[i] : 0.0;
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < n; ++i) gx[i] = grad_out[i] * y[i] * (1.0 - y[i]);
      break;
  }
  return gx;
}

}  // namespace pifo::nn
