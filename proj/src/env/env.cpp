#include "pifo/env/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pifo/errors.hpp"
#include "pifo/rng.hpp"

namespace pifo::env {

namespace {

// cart-pole
constexpr double kGravity = 9.8;
constexpr double kCartMass = 1.0;
constexpr double kPoleMass = 0.1;
constexpr double kTotalMass = kCartMass + kPoleMass;
constexpr double kPoleHalfLength = 0.5;
constexpr double kCartpoleDt = 0.02;
constexpr double kThetaLimit = 0.2;
constexpr double kXLimit = 2.4;

// mountain-car
constexpr double kMinPosition = -1.2;
constexpr double kMaxPosition = 0.6;
constexpr double kMaxSpeed = 0.07;
constexpr double kGoalPosition = 0.45;
constexpr double kPower = 0.0015;

// point-mass
constexpr double kPointDt = 0.05;
constexpr double kDamping = 0.95;
constexpr double kGoalX = 0.5;
constexpr double kGoalY = 0.5;

EnvSpec make_spec(EnvId id, std::size_t proprio, std::size_t act, double lo, double hi, int max_steps) {
  return EnvSpec{id, proprio, act, std::vector<double>(act, lo), std::vector<double>(act, hi), max_steps};
}

double sq(double v) { return v * v; }

// Distance from point p to segment [a, b].
double segment_distance(double px, double py, double ax, double ay, double bx, double by) {
  const double dx = bx - ax, dy = by - ay;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (ax + t * dx), py - (ay + t * dy));
}

// Horizontal coordinates are measured from the image centre line (u = px - 32) so
// mirroring a state maps u to exactly -u.
template <typename Inside>
Frame rasterize(Inside inside) {
  Frame f;
  const double half = static_cast<double>(kFrameSide) / 2.0;
  for (std::size_t r = 0; r < kFrameSide; ++r) {
    const double py = static_cast<double>(r) + 0.5;
    for (std::size_t c = 0; c < kFrameSide; ++c) {
      const double u = static_cast<double>(c) + 0.5 - half;
      f.set(r, c, inside(u, py));
    }
  }
  return f;
}

Frame render_cartpole(const EnvState& st) {
  constexpr double kPixelsPerMeter = 64.0 / 4.8;
  constexpr double kTrackRow = 48.0;
  const double cart_u = st.s[0] * kPixelsPerMeter;
  const double top_y = kTrackRow - 3.0;
  const double tip_u = cart_u + 24.0 * std::sin(st.s[2]);
  const double tip_y = top_y - 24.0 * std::cos(st.s[2]);
  return rasterize([&](double u, double py) {
    if (std::abs(py - (kTrackRow + 0.5)) <= 0.5) return true;
    if (std::abs(u - cart_u) <= 6.0 && std::abs(py - kTrackRow) <= 3.0) return true;
    return segment_distance(u, py, cart_u, top_y, tip_u, tip_y) <= 1.0;
  });
}

double terrain_row(double position) { return 56.0 - (std::sin(3.0 * position) + 1.0) * 24.0; }

Frame render_mountain_car(const EnvState& st) {
  constexpr double kPixelsPerUnit = 64.0 / (kMaxPosition - kMinPosition);
  const double car_u = (st.s[0] - kMinPosition) * kPixelsPerUnit - 32.0;
  const double car_y = terrain_row(st.s[0]) - 4.0;
  return rasterize([&](double u, double py) {
    const double p = (u + 32.0) / kPixelsPerUnit + kMinPosition;
    if (std::abs(py - terrain_row(p)) <= 1.0) return true;
    return std::hypot(u - car_u, py - car_y) <= 3.0;
  });
}

Frame render_point_mass(const EnvState& st) {
  constexpr double kPixelsPerUnit = 32.0;
  const double mass_u = st.s[0] * kPixelsPerUnit;
  const double mass_y = (1.0 - st.s[1]) * kPixelsPerUnit;
  const double goal_u = kGoalX * kPixelsPerUnit;
  const double goal_y = (1.0 - kGoalY) * kPixelsPerUnit;
  return rasterize([&](double u, double py) {
    if (std::abs(std::hypot(u - goal_u, py - goal_y) - 5.0) <= 0.5) return true;
    return std::hypot(u - mass_u, py - mass_y) <= 3.0;
  });
}

}  // namespace

EnvId parse_env_id(std::string_view id) {
  if (id == "cartpole-balance") return EnvId::kCartpoleBalance;
  if (id == "mountain-car") return EnvId::kMountainCar;
  if (id == "point-mass") return EnvId::kPointMass;
  throw ConfigError("unknown env id '" + std::string(id) +
                    "' (expected cartpole-balance, mountain-car or point-mass)");
}

std::string_view to_string(EnvId id) {
  switch (id) {
    case EnvId::kCartpoleBalance:
      return "cartpole-balance";
    case EnvId::kMountainCar:
      return "mountain-car";
    case EnvId::kPointMass:
      return "point-mass";
  }
  return "?";
}

const EnvSpec& spec_for(EnvId id) {
  static const EnvSpec kCartpole = make_spec(EnvId::kCartpoleBalance, 4, 1, -10.0, 10.0, 200);
  static const EnvSpec kMountain = make_spec(EnvId::kMountainCar, 2, 1, -1.0, 1.0, 300);
  static const EnvSpec kPoint = make_spec(EnvId::kPointMass, 4, 2, -1.0, 1.0, 150);
  switch (id) {
    case EnvId::kCartpoleBalance:
      return kCartpole;
    case EnvId::kMountainCar:
      return kMountain;
    case EnvId::kPointMass:
      return kPoint;
  }
  throw ConfigError("unknown env id");
}

EnvState reset(const EnvSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  EnvState st;
  switch (spec.id) {
    case EnvId::kCartpoleBalance:
      st.s.resize(4);
      for (auto& v : st.s) v = rng.uniform(-0.05, 0.05);
      break;
    case EnvId::kMountainCar:
      st.s = {rng.uniform(-0.6, -0.4), 0.0};
      break;
    case EnvId::kPointMass: {
      const double x = rng.uniform(-0.8, 0.8);
      const double y = rng.uniform(-0.8, 0.8);
      st.s = {x, y, 0.0, 0.0};
      break;
    }
  }
  return st;
}

bool is_terminal(const EnvSpec& spec, const EnvState& st) {
  if (st.step_index >= spec.max_steps) return true;
  switch (spec.id) {
    case EnvId::kCartpoleBalance:
      return std::abs(st.s[2]) > kThetaLimit || std::abs(st.s[0]) > kXLimit;
    case EnvId::kMountainCar:
      return st.s[0] >= kGoalPosition;
    case EnvId::kPointMass:
      return false;
  }
  return false;
}

StepResult step(const EnvSpec& spec, const EnvState& state, std::span<const double> action) {
  if (action.size() != spec.action_dim) {
    throw UsageError("step: action has " + std::to_string(action.size()) + " components, " +
                     std::string(to_string(spec.id)) + " expects " + std::to_string(spec.action_dim));
  }
  if (state.s.size() != spec.proprio_dim) throw UsageError("step: state does not belong to this environment");
  if (is_terminal(spec, state)) throw UsageError("step called on a finished episode");
  std::vector<double> a(action.begin(), action.end());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!std::isfinite(a[i])) throw UsageError("step: non-finite action");
    a[i] = std::clamp(a[i], spec.action_low[i], spec.action_high[i]);
  }

  StepResult out;
  out.next.step_index = state.step_index + 1;
  const auto& s = state.s;
  switch (spec.id) {
    case EnvId::kCartpoleBalance: {
      const double force = a[0];
      const double x = s[0], x_dot = s[1], theta = s[2], theta_dot = s[3];
      const double sin_t = std::sin(theta), cos_t = std::cos(theta);
      const double theta_acc =
          (kGravity * sin_t - cos_t * (force + kPoleMass * kPoleHalfLength * theta_dot * theta_dot * sin_t) / kTotalMass) /
          (kPoleHalfLength * (4.0 / 3.0 - kPoleMass * cos_t * cos_t / kTotalMass));
      const double x_acc =
          (force + kPoleMass * kPoleHalfLength * (theta_dot * theta_dot * sin_t - theta_acc * cos_t)) / kTotalMass;
      out.next.s = {x + kCartpoleDt * x_dot, x_dot + kCartpoleDt * x_acc, theta + kCartpoleDt * theta_dot,
                    theta_dot + kCartpoleDt * theta_acc};
      out.reward = 1.0;
      break;
    }
    case EnvId::kMountainCar: {
      double v = std::clamp(s[1] + kPower * a[0] - 0.0025 * std::cos(3.0 * s[0]), -kMaxSpeed, kMaxSpeed);
      const double p = std::clamp(s[0] + v, kMinPosition, kMaxPosition);
      if (p == kMinPosition && v < 0.0) v = 0.0;
      out.next.s = {p, v};
      out.reward = -0.1 * a[0] * a[0] + (p >= kGoalPosition ? 100.0 : 0.0);
      break;
    }
    case EnvId::kPointMass: {
      std::vector<double> next(4);
      for (std::size_t i = 0; i < 2; ++i) {
        const double vel = std::clamp(kDamping * s[2 + i] + a[i] * kPointDt, -1.0, 1.0);
        next[2 + i] = vel;
        next[i] = std::clamp(s[i] + vel * kPointDt, -1.0, 1.0);
      }
      out.reward = -std::sqrt(sq(next[0] - kGoalX) + sq(next[1] - kGoalY));
      out.next.s = std::move(next);
      break;
    }
  }
  out.done = is_terminal(spec, out.next);
  return out;
}

std::size_t Frame::count_on() const {
  return static_cast<std::size_t>(std::count(pixels_.begin(), pixels_.end(), std::uint8_t{1}));
}

Frame Frame::mirrored() const {
  Frame m;
  for (std::size_t r = 0; r < kFrameSide; ++r) {
    for (std::size_t c = 0; c < kFrameSide; ++c) m.set(r, kFrameSide - 1 - c, on(r, c));
  }
  return m;
}

Frame render(const EnvSpec& spec, const EnvState& state) {
  if (state.s.size() != spec.proprio_dim) throw UsageError("render: state does not belong to this environment");
  switch (spec.id) {
    case EnvId::kCartpoleBalance:
      return render_cartpole(state);
    case EnvId::kMountainCar:
      return render_mountain_car(state);
    case EnvId::kPointMass:
      return render_point_mass(state);
  }
  return Frame{};
}

}  // namespace pifo::env
