#include "pifo/nn/checkpoint.hpp"

#include <limits>

#include "pifo/bytes.hpp"
#include "pifo/errors.hpp"

namespace pifo::nn {

namespace {

constexpr std::string_view kMagic = "PIFO";

using Kind = CheckpointError::Kind;

}  // namespace

std::string encode_checkpoint(const ParamSet& params) {
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto& e : params.entries()) {
    if (e.name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw CheckpointError(Kind::kMalformed, "parameter name too long: " + e.name.substr(0, 32) + "...");
    }
    if (e.value.rank() > std::numeric_limits<std::uint8_t>::max()) {
      throw CheckpointError(Kind::kMalformed, "tensor rank too large for '" + e.name + "'");
    }
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.bytes(e.name);
    w.u8(static_cast<std::uint8_t>(e.value.rank()));
    for (auto d : e.value.dims()) w.u32(static_cast<std::uint32_t>(d));
    for (double v : e.value.data()) w.f32(static_cast<float>(v));
  }
  return w.take();
}

ParamSet decode_checkpoint(std::string_view bytes) {
  ByteReader r(bytes);
  ParamSet params;
  try {
    if (r.bytes(4) != kMagic) throw CheckpointError(Kind::kBadMagic, "not a checkpoint: bad magic");
    const auto version = r.u32();
    if (version != kCheckpointVersion) {
      throw CheckpointError(Kind::kUnsupportedVersion, "unsupported checkpoint version " + std::to_string(version));
    }
    const auto count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      std::string name(r.bytes(r.u16()));
      const auto ndim = r.u8();
      Dims dims(ndim);
      for (auto& d : dims) {
        d = r.u32();
        if (d == 0) throw CheckpointError(Kind::kMalformed, "zero extent in tensor '" + name + "'");
      }
      const std::size_t n = product(dims);
      if (r.remaining() / 4 < n) {
        throw CheckpointError(Kind::kTruncated, "checkpoint truncated inside tensor '" + name + "'");
      }
      std::vector<double> data(n);
      for (auto& v : data) v = static_cast<double>(r.f32());
      if (params.contains(name)) throw CheckpointError(Kind::kMalformed, "duplicate tensor '" + name + "'");
      params.add(std::move(name), Tensor(std::move(dims), std::move(data)));
    }
  } catch (const FormatError& e) {
    throw CheckpointError(Kind::kTruncated, std::string("checkpoint truncated: ") + e.what());
  }
  if (r.remaining() != 0) {
    throw CheckpointError(Kind::kMalformed, std::to_string(r.remaining()) + " trailing bytes after last tensor");
  }
  return params;
}

void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
  try {
    write_file(path, encode_checkpoint(params));
  } catch (const UsageError& e) {
    throw CheckpointError(Kind::kIo, e.what());
  }
}

ParamSet load_checkpoint(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = read_file(path);
  } catch (const UsageError& e) {
    throw CheckpointError(Kind::kIo, e.what());
  }
  return decode_checkpoint(bytes);
}

}  // namespace pifo::nn
