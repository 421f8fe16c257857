#ifndef PIFO_NN_ADAM_HPP_
#define PIFO_NN_ADAM_HPP_

#include <cstdint>
#include <vector>

#include "pifo/nn/tensor.hpp"

namespace pifo::nn {

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// First/second moment estimates mirroring a ParamSet entry for entry.
class AdamState {
 public:
  AdamState() = default;
  AdamState(const ParamSet& params, AdamConfig config);

  const AdamConfig& config() const noexcept { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::uint64_t step() const noexcept { return step_; }

  const std::vector<Tensor>& first_moments() const noexcept { return m_; }
  const std::vector<Tensor>& second_moments() const noexcept { return v_; }

 private:
  friend void adam_step(ParamSet& params, AdamState& state);

  AdamConfig config_;
  std::uint64_t step_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

// One bias-corrected Adam update from the gradients currently stored in `params`.
// Gradients are left untouched. Throws StateError if the moments do not mirror
// the parameter dims.
void adam_step(ParamSet& params, AdamState& state);

}  // namespace pifo::nn

#endif  // PIFO_NN_ADAM_HPP_
