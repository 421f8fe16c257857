#ifndef PIFO_AGENT_FRAME_STACK_HPP_
#define PIFO_AGENT_FRAME_STACK_HPP_

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "pifo/env/env.hpp"
#include "pifo/nn/tensor.hpp"

namespace pifo {

// Four consecutive frames. For the discriminator this is (o[t-2], o[t-1], o[t], o[t+1]).
struct FrameStack {
  std::array<env::Frame, 4> frames;

  friend bool operator==(const FrameStack&, const FrameStack&) = default;
};

// One stack per frame of a single trajectory, replicating o[0] before the start
// and o[T-1] past the end. Throws UsageError on an empty sequence.
std::vector<FrameStack> build_stacks(std::span<const env::Frame> frames);

// Causal history for the vision policy: (o[t-3], o[t-2], o[t-1], o[t]), replicating
// the first frame of the episode. The policy never sees o[t+1], which depends on
// the action it is about to choose.
class FrameHistory {
 public:
  void reset(const env::Frame& first);
  void push(const env::Frame& frame);
  const FrameStack& stack() const noexcept { return stack_; }

 private:
  FrameStack stack_;
};

// [B, 4, 64, 64] with pixel values 0.0 / 1.0.
nn::Tensor stacks_to_tensor(std::span<const FrameStack> stacks);
nn::Tensor stacks_to_tensor(std::span<const FrameStack> stacks, std::span<const std::size_t> indices);

}  // namespace pifo

#endif  // PIFO_AGENT_FRAME_STACK_HPP_
