#include "pifo/nn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>
#include <string>

#include "pifo/errors.hpp"

namespace pifo::nn {

const Tensor& Var::value() const {
  if (!tape_) throw UsageError("value() of an unrecorded variable");
  return tape_->value(id_);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::param(ParamSet& set, std::string_view name) {
  const std::size_t index = set.index_of(name);
  Node node;
  node.alias = &set.entry(index).value;
  node.requires_grad = true;
  node.set = &set;
  node.entry = index;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    check_owned(in, "record");
    needs = needs || nodes_[in.id()].requires_grad;
  }
  Node node;
  node.value = std::move(value);
  node.requires_grad = needs;
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

void Tape::check_owned(Var v, std::string_view op) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw UsageError(std::string(op) + ": variable was not recorded on this tape");
  }
}

Tensor& Tape::grad_slot(std::size_t id) {
  Node& node = nodes_.at(id);
  if (!node.has_grad) {
    node.grad = Tensor(value(id).dims());
    node.has_grad = true;
  }
  return node.grad;
}

Tensor Tape::grad(Var v) const {
  check_owned(v, "grad");
  const Node& node = nodes_[v.id()];
  return node.has_grad ? node.grad : Tensor(value(v.id()).dims());
}

void Tape::backward(Var loss, ParamSet& params, bool accumulate) {
  ParamSet* sets[] = {&params};
  backward(loss, std::span<ParamSet* const>(sets), accumulate);
}

void Tape::backward(Var loss, std::initializer_list<ParamSet*> params, bool accumulate) {
  backward(loss, std::span<ParamSet* const>(params.begin(), params.size()), accumulate);
}

void Tape::backward(Var loss, std::span<ParamSet* const> params, bool accumulate) {
  if (!loss.valid() || nodes_.empty()) throw UsageError("backward without a recorded forward pass");
  check_owned(loss, "backward");
  if (value(loss.id()).size() != 1) {
    throw UsageError("backward needs a scalar loss, got dims " + to_string(value(loss.id()).dims()));
  }
  if (!accumulate) {
    for (ParamSet* set : params) set->zero_grad();
  }
  for (Node& node : nodes_) {
    node.has_grad = false;
    node.grad = Tensor();
  }
  if (!nodes_[loss.id()].requires_grad) return;

  grad_slot(loss.id()).fill(1.0);
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.has_grad || !node.requires_grad) continue;
    if (node.backward) {
      node.backward(*this, i);
    } else if (node.set && std::find(params.begin(), params.end(), node.set) != params.end()) {
      auto& target = node.set->entry(node.entry).grad;
      auto dst = target.data();
      auto src = node.grad.data();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
  }
}

namespace {

Tape& owner(std::initializer_list<Var> vars, std::string_view op) {
  Tape* tape = nullptr;
  for (const Var& v : vars) {
    if (!v.valid()) throw UsageError(std::string(op) + ": unrecorded operand");
    if (tape && v.tape() != tape) throw UsageError(std::string(op) + ": operands live on different tapes");
    tape = v.tape();
  }
  return *tape;
}

void require_same(Var a, Var b, std::string_view op) {
  if (a.dims() != b.dims()) {
    throw ShapeError(std::string(op) + ": " + to_string(a.dims()) + " vs " + to_string(b.dims()));
  }
}

// Elementwise op whose derivative is a function of (input, output).
template <typename Fwd, typename Deriv>
Var unary(Var a, std::string_view name, Fwd fwd, Deriv deriv) {
  Tape& t = owner({a}, name);
  Tensor y = a.value();
  for (auto& v : y.data()) v = fwd(v);
  const std::size_t ai = a.id();
  return t.record(std::move(y), {a}, [ai, deriv](Tape& tape, std::size_t self) {
    const Tensor& g = tape.grad_of(self);
    const Tensor& x = tape.value(ai);
    const Tensor& out = tape.value(self);
    Tensor& ga = tape.grad_slot(ai);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * deriv(x[k], out[k]);
  });
}

}  // namespace

Var dense(Var x, Var weights, Var bias) {
  Tape& t = owner({x, weights, bias}, "dense");
  Tensor y = dense_forward(x.value(), weights.value(), bias.value());
  const std::size_t xi = x.id(), wi = weights.id(), bi = bias.id();
  return t.record(std::move(y), {x, weights, bias}, [xi, wi, bi](Tape& tape, std::size_t self) {
    dense_backward(tape.value(xi), tape.value(wi), tape.grad_of(self), tape.input_grad(xi), tape.input_grad(wi),
                   tape.input_grad(bi));
  });
}

Var conv2d(Var x, Var kernel, Var bias, std::size_t stride) {
  Tape& t = owner({x, kernel, bias}, "conv2d");
  Tensor y = conv2d_forward(x.value(), kernel.value(), bias.value(), stride);
  const std::size_t xi = x.id(), ki = kernel.id(), bi = bias.id();
  return t.record(std::move(y), {x, kernel, bias}, [xi, ki, bi, stride](Tape& tape, std::size_t self) {
    conv2d_backward(tape.value(xi), tape.value(ki), tape.grad_of(self), stride, tape.input_grad(xi),
                    tape.input_grad(ki), tape.input_grad(bi));
  });
}

Var activation(Var x, Activation kind) {
  Tape& t = owner({x}, "activation");
  Tensor y = activation_forward(x.value(), kind);
  const std::size_t xi = x.id();
  return t.record(std::move(y), {x}, [xi, kind](Tape& tape, std::size_t self) {
    Tensor gx = activation_backward(tape.value(xi), tape.value(self), tape.grad_of(self), kind);
    Tensor& dst = tape.grad_slot(xi);
    for (std::size_t k = 0; k < gx.size(); ++k) dst[k] += gx[k];
  });
}

Var reshape(Var x, Dims dims) {
  Tape& t = owner({x}, "reshape");
  Tensor y = x.value().reshaped(std::move(dims));
  const std::size_t xi = x.id();
  return t.record(std::move(y), {x}, [xi](Tape& tape, std::size_t self) {
    const Tensor& g = tape.grad_of(self);
    Tensor& dst = tape.grad_slot(xi);
    for (std::size_t k = 0; k < g.size(); ++k) dst[k] += g[k];
  });
}

Var add(Var a, Var b) {
  Tape& t = owner({a, b}, "add");
  require_same(a, b, "add");
  Tensor y = a.value();
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += b.value()[k];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(std::move(y), {a, b}, [ai, bi](Tape& tape, std::size_t self) {
    const Tensor& g = tape.grad_of(self);
    for (std::size_t id : {ai, bi}) {
      if (Tensor* dst = tape.input_grad(id)) {
        for (std::size_t k = 0; k < g.size(); ++k) (*dst)[k] += g[k];
      }
    }
  });
}

Var sub(Var a, Var b) {
  Tape& t = owner({a, b}, "sub");
  require_same(a, b, "sub");
  Tensor y = a.value();
  for (std::size_t k = 0; k < y.size(); ++k) y[k] -= b.value()[k];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(std::move(y), {a, b}, [ai, bi](Tape& tape, std::size_t self) {
    const Tensor& g = tape.grad_of(self);
    if (Tensor* ga = tape.input_grad(ai)) {
      for (std::size_t k = 0; k < g.size(); ++k) (*ga)[k] += g[k];
    }
    if (Tensor* gb = tape.input_grad(bi)) {
      for (std::size_t k = 0; k < g.size(); ++k) (*gb)[k] -= g[k];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = owner({a, b}, "mul");
  require_same(a, b, "mul");
  Tensor y = a.value();
  for (std::size_t k = 0; k < y.size(); ++k) y[k] *= b.value()[k];
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(std::move(y), {a, b}, [ai, bi](Tape& tape, std::size_t self) {
    const Tensor& g = tape.grad_of(self);
    const Tensor& av = tape.value(ai);
    const Tensor& bv = tape.value(bi);
    if (Tensor* ga = tape.input_grad(ai)) {
      for (std::size_t k = 0; k < g.size(); ++k) (*ga)[k] += g[k] * bv[k];
    }
    if (Tensor* gb = tape.input_grad(bi)) {
      for (std::size_t k = 0; k < g.size(); ++k) (*gb)[k] += g[k] * av[k];
    }
  });
}

Var minimum(Var a, Var b) {
  Tape& t = owner({a, b}, "minimum");
  require_same(a, b, "minimum");
  Tensor y = a.value();
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = std::min(y[k], b.value()[k]);
  const std::size_t ai = a.id(), bi = b.id();
  return t.record(std::move(y), {a, b}, [ai, bi](Tape& tape, std::size_t self) {
    const Tensor& g = tape.grad_of(self);
    const Tensor& av = tape.value(ai);
    const Tensor& bv = tape.value(bi);
    Tensor* ga = tape.input_grad(ai);
    Tensor* gb = tape.input_grad(bi);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (av[k] <= bv[k]) {
        if (ga) (*ga)[k] += g[k];
      } else if (gb) {
        (*gb)[k] += g[k];
      }
    }
  });
}

Var scale(Var a, double factor) {
  return unary(a, "scale", [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Var add_scalar(Var a, double offset) {
  return unary(a, "add_scalar", [offset](double v) { return v + offset; }, [](double, double) { return 1.0; });
}

Var exp(Var a) {
  return unary(a, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary(a, "log", [](double v) { return std::log(v); }, [](double x, double) { return 1.0 / x; });
}

Var square(Var a) {
  return unary(a, "square", [](double v) { return v * v; }, [](double x, double) { return 2.0 * x; });
}

Var clamp(Var a, double lo, double hi) {
  if (!(lo <= hi)) throw UsageError("clamp: empty interval");
  return unary(
      a, "clamp", [lo, hi](double v) { return std::clamp(v, lo, hi); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var sum(Var a) {
  Tape& t = owner({a}, "sum");
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  const std::size_t ai = a.id();
  return t.record(Tensor::scalar(total), {a}, [ai](Tape& tape, std::size_t self) {
    const double g = tape.grad_of(self)[0];
    for (auto& v : tape.grad_slot(ai).data()) v += g;
  });
}

Var mean(Var a) {
  const double n = static_cast<double>(a.value().size());
  Tape& t = owner({a}, "mean");
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  const std::size_t ai = a.id();
  return t.record(Tensor::scalar(total / n), {a}, [ai, n](Tape& tape, std::size_t self) {
    const double g = tape.grad_of(self)[0] / n;
    for (auto& v : tape.grad_slot(ai).data()) v += g;
  });
}

Var gaussian_log_prob(Var mean, Var log_std, const Tensor& actions) {
  Tape& t = owner({mean, log_std}, "gaussian_log_prob");
  const Tensor& mu = mean.value();
  const Tensor& ls = log_std.value();
  if (mu.rank() != 2 || ls.rank() != 1 || ls.dim(0) != mu.dim(1) || actions.dims() != mu.dims()) {
    throw ShapeError("gaussian_log_prob: mean " + to_string(mu.dims()) + " vs log_std " + to_string(ls.dims()) +
                     " and actions " + to_string(actions.dims()));
  }
  const std::size_t batch = mu.dim(0), d = mu.dim(1);
  const double log_norm = 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
  Tensor out({batch});
  for (std::size_t b = 0; b < batch; ++b) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double z = (actions[b * d + j] - mu[b * d + j]) / std::exp(ls[j]);
      acc += -0.5 * z * z - ls[j];
    }
    out[b] = acc - log_norm;
  }
  const std::size_t mi = mean.id(), li = log_std.id();
  return t.record(std::move(out), {mean, log_std}, [mi, li, actions, batch, d](Tape& tape, std::size_t self) {
    const Tensor& g = tape.grad_of(self);
    const Tensor& mu = tape.value(mi);
    const Tensor& ls = tape.value(li);
    Tensor* gm = tape.input_grad(mi);
    Tensor* gl = tape.input_grad(li);
    for (std::size_t b = 0; b < batch; ++b) {
      for (std::size_t j = 0; j < d; ++j) {
        const double sigma = std::exp(ls[j]);
        const double z = (actions[b * d + j] - mu[b * d + j]) / sigma;
        if (gm) (*gm)[b * d + j] += g[b] * z / sigma;
        if (gl) (*gl)[j] += g[b] * (z * z - 1.0);
      }
    }
  });
}

Var gaussian_entropy(Var log_std) {
  Tape& t = owner({log_std}, "gaussian_entropy");
  const Tensor& ls = log_std.value();
  if (ls.rank() != 1) throw ShapeError("gaussian_entropy: log_std " + to_string(ls.dims()));
  const double per_dim = 0.5 * std::log(2.0 * std::numbers::pi * std::numbers::e);
  double h = 0.0;
  for (double v : ls.data()) h += v + per_dim;
  const std::size_t li = log_std.id();
  return t.record(Tensor::scalar(h), {log_std}, [li](Tape& tape, std::size_t self) {
    const double g = tape.grad_of(self)[0];
    for (auto& v : tape.grad_slot(li).data()) v += g;
  });
}

}  // namespace pifo::nn
