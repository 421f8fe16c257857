#ifndef PIFO_NN_CHECKPOINT_HPP_
#define PIFO_NN_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "pifo/nn/tensor.hpp"

namespace pifo::nn {

// Binary layout, all integers little-endian, no padding:
//   "PIFO" | u32 version (=1) | u32 tensor count
//   per tensor: u16 name length | name bytes | u8 ndim | ndim x u32 extents |
//               product(extents) x f32 values
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string encode_checkpoint(const ParamSet& params);
// Values are promoted to double; gradients start at zero.
ParamSet decode_checkpoint(std::string_view bytes);

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path);
ParamSet load_checkpoint(const std::filesystem::path& path);

}  // namespace pifo::nn

#endif  // PIFO_NN_CHECKPOINT_HPP_
