#include "pifo/env/demo.hpp"

#include <limits>

#include "pifo/bytes.hpp"
#include "pifo/errors.hpp"

namespace pifo::env {

std::size_t DemoSet::total_frames() const {
  std::size_t n = 0;
  for (const auto& t : trajectories) n += t.size();
  return n;
}

std::string encode_demos(const DemoSet& demos) {
  if (demos.env_id.size() > std::numeric_limits<std::uint16_t>::max()) throw FormatError("env id too long");
  ByteWriter w;
  w.bytes("DEMO");
  w.u32(kDemoVersion);
  w.u16(static_cast<std::uint16_t>(demos.env_id.size()));
  w.bytes(demos.env_id);
  w.u32(static_cast<std::uint32_t>(demos.trajectories.size()));
  for (const auto& traj : demos.trajectories) {
    w.u32(static_cast<std::uint32_t>(traj.size()));
    for (const auto& frame : traj) {
      for (auto p : frame.pixels()) w.u8(p ? 255 : 0);
    }
  }
  return w.take();
}

DemoSet decode_demos(std::string_view bytes) {
  ByteReader r(bytes);
  if (r.bytes(4) != "DEMO") throw FormatError("not a demo file: bad magic");
  const auto version = r.u32();
  if (version != kDemoVersion) throw FormatError("unsupported demo version " + std::to_string(version));
  DemoSet demos;
  demos.env_id = std::string(r.bytes(r.u16()));
  const auto count = r.u32();
  demos.trajectories.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto length = r.u32();
    if (r.remaining() / kFramePixels < length) {
      throw FormatError("demo trajectory " + std::to_string(i) + " truncated");
    }
    std::vector<Frame> traj(length);
    for (auto& frame : traj) {
      auto px = frame.pixels();
      for (auto& p : px) {
        const auto b = r.u8();
        if (b != 0 && b != 255) throw FormatError("demo pixel value " + std::to_string(b) + " is not 0 or 255");
        p = b ? 1 : 0;
      }
    }
    demos.trajectories.push_back(std::move(traj));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after last demo trajectory");
  return demos;
}

void save_demos(const DemoSet& demos, const std::filesystem::path& path) { write_file(path, encode_demos(demos)); }

DemoSet load_demos(const std::filesystem::path& path) { return decode_demos(read_file(path)); }

}  // namespace pifo::env
