#ifndef PIFO_NN_AUTODIFF_HPP_
#define PIFO_NN_AUTODIFF_HPP_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

#include "pifo/nn/kernels.hpp"
#include "pifo/nn/tensor.hpp"

namespace pifo::nn {

class Tape;

// Handle to a value recorded on a Tape.
class Var {
 public:
  Var() = default;

  bool valid() const noexcept { return tape_ != nullptr; }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }

  const Tensor& value() const;
  const Dims& dims() const { return value().dims(); }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Records a forward computation so that `backward` can replay it in reverse.
//
// Nodes are appended in evaluation order, so reverse insertion order is a valid
// topological order. Constants never receive gradients; parameter leaves read
// their ParamSet entry in place (it must not be modified while the tape is alive)
// and write gradients back into it. A tape is single-threaded; separate tapes may
// read the same parameters concurrently.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  Var param(ParamSet& set, std::string_view name);

  // Fills d(loss)/d(param) for every entry of `params`. Gradients are reset to
  // zero first unless `accumulate` is set; entries off the computation path end
  // up with zero gradient.
  void backward(Var loss, std::span<ParamSet* const> params, bool accumulate = false);
  void backward(Var loss, ParamSet& params, bool accumulate = false);
  void backward(Var loss, std::initializer_list<ParamSet*> params, bool accumulate = false);

  std::size_t size() const noexcept { return nodes_.size(); }

  // Gradient of the last backward pass w.r.t. any recorded value (zeros if unreached).
  Tensor grad(Var v) const;

  // --- op-author interface ---
  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);
  const Tensor& value(std::size_t id) const {
    const Node& n = nodes_.at(id);
    return n.alias ? *n.alias : n.value;
  }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }
  // Accumulation target for input `id`, or null when it needs no gradient.
  Tensor* input_grad(std::size_t id) { return requires_grad(id) ? &grad_slot(id) : nullptr; }
  // Upstream gradient of node `id` (allocated on first touch).
  const Tensor& grad_of(std::size_t id) { return grad_slot(id); }
  // Accumulation target for an input's gradient.
  Tensor& grad_slot(std::size_t id);

 private:
  struct Node {
    Tensor value;
    const Tensor* alias = nullptr;  // parameter leaves read the ParamSet in place
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
    ParamSet* set = nullptr;
    std::size_t entry = 0;
  };

  void check_owned(Var v, std::string_view op) const;

  std::vector<Node> nodes_;
};

// --- differentiable operations ---

Var dense(Var x, Var weights, Var bias);
Var conv2d(Var x, Var kernel, Var bias, std::size_t stride);
Var activation(Var x, Activation kind);
inline Var tanh(Var x) { return activation(x, Activation::kTanh); }
inline Var relu(Var x) { return activation(x, Activation::kRelu); }
inline Var sigmoid(Var x) { return activation(x, Activation::kSigmoid); }

Var reshape(Var x, Dims dims);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var minimum(Var a, Var b);  // ties route the gradient to `a`
Var scale(Var a, double factor);
Var add_scalar(Var a, double offset);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var clamp(Var a, double lo, double hi);  // zero gradient outside [lo, hi]
Var sum(Var a);
Var mean(Var a);

// Row-wise diagonal Gaussian log density: mean [B,d], log_std [d], actions [B,d] -> [B].
Var gaussian_log_prob(Var mean, Var log_std, const Tensor& actions);
// Entropy of a diagonal Gaussian, scalar.
Var gaussian_entropy(Var log_std);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator-(Var a) { return scale(a, -1.0); }

}  // namespace pifo::nn

#endif  // PIFO_NN_AUTODIFF_HPP_
