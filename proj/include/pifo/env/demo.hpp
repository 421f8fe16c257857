#ifndef PIFO_ENV_DEMO_HPP_
#define PIFO_ENV_DEMO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pifo/env/env.hpp"

namespace pifo::env {

// Video-only demonstrations: frames and nothing else. There is deliberately no
// field through which demonstrator states or actions could travel.
struct DemoSet {
  std::string env_id;
  std::vector<std::vector<Frame>> trajectories;

  std::size_t total_frames() const;
};

// "DEMO" | u32 version (=1) | u16 id length | id | u32 trajectory count
// per trajectory: u32 T | T x 4096 bytes (0 or 255 per pixel, row-major)
inline constexpr std::uint32_t kDemoVersion = 1;

std::string encode_demos(const DemoSet& demos);
DemoSet decode_demos(std::string_view bytes);  // FormatError on anything malformed

void save_demos(const DemoSet& demos, const std::filesystem::path& path);
DemoSet load_demos(const std::filesystem::path& path);

}  // namespace pifo::env

#endif  // PIFO_ENV_DEMO_HPP_
