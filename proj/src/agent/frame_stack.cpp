#include "pifo/agent/frame_stack.hpp"

#include <algorithm>

#include "pifo/errors.hpp"

namespace pifo {

std::vector<FrameStack> build_stacks(std::span<const env::Frame> frames) {
  if (frames.empty()) throw UsageError("build_stacks: empty frame sequence");
  const auto last = static_cast<std::ptrdiff_t>(frames.size()) - 1;
  std::vector<FrameStack> stacks(frames.size());
  for (std::ptrdiff_t t = 0; t <= last; ++t) {
    for (std::ptrdiff_t k = 0; k < 4; ++k) {
      const auto src = std::clamp<std::ptrdiff_t>(t - 2 + k, 0, last);
      stacks[static_cast<std::size_t>(t)].frames[static_cast<std::size_t>(k)] = frames[static_cast<std::size_t>(src)];
    }
  }
  return stacks;
}

void FrameHistory::reset(const env::Frame& first) { stack_.frames.fill(first); }

void FrameHistory::push(const env::Frame& frame) {
  std::rotate(stack_.frames.begin(), stack_.frames.begin() + 1, stack_.frames.end());
  stack_.frames.back() = frame;
}

namespace {

void write_stack(const FrameStack& stack, double* dst) {
  for (const auto& frame : stack.frames) {
    for (auto p : frame.pixels()) *dst++ = p;
  }
}

}  // namespace

nn::Tensor stacks_to_tensor(std::span<const FrameStack> stacks) {
  if (stacks.empty()) throw UsageError("stacks_to_tensor: empty batch");
  nn::Tensor t({stacks.size(), 4, env::kFrameSide, env::kFrameSide});
  constexpr std::size_t kStride = 4 * env::kFramePixels;
  for (std::size_t b = 0; b < stacks.size(); ++b) write_stack(stacks[b], t.raw() + b * kStride);
  return t;
}

nn::Tensor stacks_to_tensor(std::span<const FrameStack> stacks, std::span<const std::size_t> indices) {
  if (indices.empty()) throw UsageError("stacks_to_tensor: empty batch");
  nn::Tensor t({indices.size(), 4, env::kFrameSide, env::kFrameSide});
  constexpr std::size_t kStride = 4 * env::kFramePixels;
  for (std::size_t b = 0; b < indices.size(); ++b) write_stack(stacks[indices[b]], t.raw() + b * kStride);
  return t;
}

}  // namespace pifo
