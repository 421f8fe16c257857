#ifndef PIFO_ENV_ENV_HPP_
#define PIFO_ENV_ENV_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pifo::env {

enum class EnvId { kCartpoleBalance, kMountainCar, kPointMass };

// Throws ConfigError for anything but the three known ids.
EnvId parse_env_id(std::string_view id);
std::string_view to_string(EnvId id);

struct EnvSpec {
  EnvId id = EnvId::kCartpoleBalance;
  std::size_t proprio_dim = 0;
  std::size_t action_dim = 0;
  std::vector<double> action_low;
  std::vector<double> action_high;
  int max_steps = 0;
};

const EnvSpec& spec_for(EnvId id);
inline const EnvSpec& spec_for(std::string_view id) { return spec_for(parse_env_id(id)); }

struct EnvState {
  std::vector<double> s;
  int step_index = 0;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct StepResult {
  EnvState next;
  double reward = 0.0;
  bool done = false;
};

// cartpole-balance: s = [x, x_dot, theta, theta_dot]
// mountain-car:     s = [position, velocity]
// point-mass:       s = [x, y, x_dot, y_dot], goal at (0.5, 0.5)
EnvState reset(const EnvSpec& spec, std::uint64_t seed);

// Clamps the action to the spec bounds, integrates one control step.
// Throws UsageError when `state` is already terminal.
StepResult step(const EnvSpec& spec, const EnvState& state, std::span<const double> action);

bool is_terminal(const EnvSpec& spec, const EnvState& state);

inline constexpr std::size_t kFrameSide = 64;
inline constexpr std::size_t kFramePixels = kFrameSide * kFrameSide;

// Binary 64x64 image, row 0 at the top. Stored one byte per pixel (0 or 1).
class Frame {
 public:
  double operator()(std::size_t row, std::size_t col) const { return pixels_[row * kFrameSide + col]; }
  bool on(std::size_t row, std::size_t col) const { return pixels_[row * kFrameSide + col] != 0; }
  void set(std::size_t row, std::size_t col, bool value) { pixels_[row * kFrameSide + col] = value ? 1 : 0; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }
  std::size_t count_on() const;

  Frame mirrored() const;

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  std::array<std::uint8_t, kFramePixels> pixels_{};
};

Frame render(const EnvSpec& spec, const EnvState& state);

}  // namespace pifo::env

#endif  // PIFO_ENV_ENV_HPP_
