#include "pifo/nn/adam.hpp"

#include <cmath>

#include "pifo/errors.hpp"

namespace pifo::nn {

AdamState::AdamState(const ParamSet& params, AdamConfig config) : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& e : params.entries()) {
    m_.emplace_back(e.value.dims());
    v_.emplace_back(e.value.dims());
  }
}

void adam_step(ParamSet& params, AdamState& state) {
  if (state.m_.size() != params.size()) {
    throw StateError("adam: state tracks " + std::to_string(state.m_.size()) + " tensors, params have " +
                     std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.m_[i].dims() != params.entry(i).value.dims()) {
      throw StateError("adam: moment dims " + to_string(state.m_[i].dims()) + " vs parameter '" +
                       params.entry(i).name + "' " + to_string(params.entry(i).value.dims()));
    }
  }

  const auto& c = state.config_;
  state.step_ += 1;
  const double t = static_cast<double>(state.step_);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& entry = params.entry(i);
    auto value = entry.value.data();
    auto grad = entry.grad.data();
    auto m = state.m_[i].data();
    auto v = state.v_[i].data();
    for (std::size_t k = 0; k < value.size(); ++k) {
      m[k] = c.beta1 * m[k] + (1.0 - c.beta1) * grad[k];
      v[k] = c.beta2 * v[k] + (1.0 - c.beta2) * grad[k] * grad[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      value[k] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace pifo::nn
