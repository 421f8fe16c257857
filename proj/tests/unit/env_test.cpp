#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "pifo/bytes.hpp"
#include "pifo/env/demo.hpp"
#include "pifo/env/env.hpp"
#include "pifo/errors.hpp"
#include "pifo/rng.hpp"

namespace pifo::env {
namespace {

const EnvSpec& cartpole() { return spec_for(EnvId::kCartpoleBalance); }
const EnvSpec& mountain() { return spec_for(EnvId::kMountainCar); }
const EnvSpec& point() { return spec_for(EnvId::kPointMass); }

EnvState at(std::vector<double> s) { return EnvState{std::move(s), 0}; }

TEST(Spec, DimensionsPerId) {
  EXPECT_EQ(cartpole().proprio_dim, 4u);
  EXPECT_EQ(cartpole().action_dim, 1u);
  EXPECT_EQ(mountain().proprio_dim, 2u);
  EXPECT_EQ(mountain().action_dim, 1u);
  EXPECT_EQ(point().proprio_dim, 4u);
  EXPECT_EQ(point().action_dim, 2u);
  for (const EnvSpec* s : {&cartpole(), &mountain(), &point()}) {
    for (std::size_t i = 0; i < s->action_dim; ++i) EXPECT_LT(s->action_low[i], s->action_high[i]);
  }
  EXPECT_THROW(parse_env_id("hopper"), ConfigError);
  EXPECT_EQ(to_string(parse_env_id("point-mass")), "point-mass");
}

TEST(Reset, DeterministicPerSeed) {
  for (const EnvSpec* s : {&cartpole(), &mountain(), &point()}) {
    EXPECT_EQ(reset(*s, 42), reset(*s, 42));
    EXPECT_NE(reset(*s, 42), reset(*s, 43));
  }
}

TEST(Reset, InitialDistributions) {
  for (std::uint64_t seed = 0; seed < 10000; ++seed) {
    for (double v : reset(cartpole(), seed).s) {
      EXPECT_GT(v, -0.05);
      EXPECT_LT(v, 0.05);
    }
  }
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const EnvState m = reset(mountain(), seed);
    EXPECT_EQ(m.s[1], 0.0);
    EXPECT_GE(m.s[0], -0.6);
    EXPECT_LT(m.s[0], -0.4);
    const EnvState p = reset(point(), seed);
    EXPECT_LE(std::abs(p.s[0]), 0.8);
    EXPECT_LE(std::abs(p.s[1]), 0.8);
    EXPECT_EQ(p.s[2], 0.0);
    EXPECT_EQ(p.s[3], 0.0);
  }
}

TEST(Step, CartpoleEquilibriumIsFixedPoint) {
  const double f[] = {0.0};
  const StepResult r = step(cartpole(), at({0, 0, 0, 0}), f);
  EXPECT_EQ(r.next.s, (std::vector<double>{0, 0, 0, 0}));
  EXPECT_EQ(r.reward, 1.0);
  EXPECT_FALSE(r.done);
}

TEST(Step, CartpoleHandEvaluatedDynamics) {
  const double g = 9.8, mc = 1.0, mp = 0.1, l = 0.5, dt = 0.02, force = 10.0, theta = 0.05;
  const double total = mc + mp;
  const double theta_acc = (g * std::sin(theta) - std::cos(theta) * force / total) /
                           (l * (4.0 / 3.0 - mp * std::cos(theta) * std::cos(theta) / total));
  const double x_acc = (force - mp * l * theta_acc * std::cos(theta)) / total;
  const double f[] = {force};
  const StepResult r = step(cartpole(), at({0, 0, theta, 0}), f);
  EXPECT_NEAR(r.next.s[0], 0.0, 1e-15);
  EXPECT_NEAR(r.next.s[1], dt * x_acc, 1e-15);
  EXPECT_NEAR(r.next.s[2], theta, 1e-15);
  EXPECT_NEAR(r.next.s[3], dt * theta_acc, 1e-15);
}

TEST(Step, ActionsAreClampedToBounds) {
  const double big[] = {50.0}, limit[] = {10.0};
  EXPECT_EQ(step(cartpole(), at({0.1, 0, 0.02, 0}), big).next, step(cartpole(), at({0.1, 0, 0.02, 0}), limit).next);
}

TEST(Step, MountainCarGravityVanishesAtMinusPiOverSix) {
  const double a[] = {1.0};
  const double p = -std::numbers::pi / 6.0;
  const StepResult r = step(mountain(), at({p, 0.0}), a);
  EXPECT_NEAR(r.next.s[1], 0.0015, 1e-15);
  EXPECT_NEAR(r.next.s[0], p + 0.0015, 1e-15);
  EXPECT_NEAR(r.reward, -0.1, 1e-15);
}

TEST(Step, MountainCarGoalAndLeftWall) {
  const double push[] = {1.0}, back[] = {-1.0};
  const StepResult goal = step(mountain(), at({0.449, 0.05}), push);
  EXPECT_TRUE(goal.done);
  EXPECT_NEAR(goal.reward, 100.0 - 0.1, 1e-12);
  const StepResult wall = step(mountain(), at({-1.19, -0.06}), back);
  EXPECT_EQ(wall.next.s[0], -1.2);
  EXPECT_EQ(wall.next.s[1], 0.0);
}

TEST(Step, PointMassRewardIsNegativeGoalDistance) {
  const double a[] = {0.0, 0.0};
  const StepResult r = step(point(), at({0.5, -0.5, 0.0, 0.0}), a);
  EXPECT_DOUBLE_EQ(r.reward, -1.0);
}

TEST(Step, AfterDoneIsUsageError) {
  const double f[] = {0.0};
  EXPECT_THROW(step(cartpole(), at({0, 0, 0.5, 0}), f), UsageError);
  EnvState timed_out = at({0, 0, 0, 0});
  timed_out.step_index = 200;
  EXPECT_THROW(step(cartpole(), timed_out, f), UsageError);
}

TEST(Step, TimeLimitEndsEveryEpisode) {
  const double zero[] = {0.0, 0.0};
  EnvState s = reset(point(), 1);
  int steps = 0;
  for (StepResult r{}; !r.done; ++steps) {
    r = step(point(), s, zero);
    s = r.next;
  }
  EXPECT_EQ(steps, point().max_steps);
}

TEST(Step, StateStaysWithinClampsUnderRandomActions) {
  Rng rng(3);
  for (const EnvSpec* spec : {&mountain(), &point()}) {
    for (int ep = 0; ep < 20; ++ep) {
      EnvState s = reset(*spec, rng.next());
      int steps = 0;
      while (!is_terminal(*spec, s)) {
        std::vector<double> a(spec->action_dim);
        for (auto& v : a) v = rng.uniform(-3.0, 3.0);
        s = step(*spec, s, a).next;
        ++steps;
        if (spec->id == EnvId::kMountainCar) {
          EXPECT_GE(s.s[0], -1.2);
          EXPECT_LE(s.s[0], 0.6);
          EXPECT_LE(std::abs(s.s[1]), 0.07);
        } else {
          for (double v : s.s) EXPECT_LE(std::abs(v), 1.0);
        }
      }
      EXPECT_LE(steps, spec->max_steps);
    }
  }
}

TEST(Step, SameSeedAndActionsGiveIdenticalTrajectories) {
  auto run = [] {
    Rng rng(11);
    EnvState s = reset(cartpole(), 5);
    std::vector<Frame> frames{render(cartpole(), s)};
    while (!is_terminal(cartpole(), s)) {
      const double a[] = {rng.uniform(-10.0, 10.0)};
      s = step(cartpole(), s, a).next;
      frames.push_back(render(cartpole(), s));
    }
    return frames;
  };
  EXPECT_EQ(run(), run());
}

TEST(Symmetry, CartpoleMirroredStateMirrorsTrajectoryAndFrames) {
  Rng rng(4);
  EnvState s = at({0.3, -0.2, 0.07, 0.1});
  EnvState m = at({-0.3, 0.2, -0.07, -0.1});
  for (int t = 0; t < 30 && !is_terminal(cartpole(), s); ++t) {
    EXPECT_EQ(render(cartpole(), m), render(cartpole(), s).mirrored());
    const double a = rng.uniform(-5.0, 5.0);
    const double fa[] = {a}, fm[] = {-a};
    s = step(cartpole(), s, fa).next;
    m = step(cartpole(), m, fm).next;
    for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(m.s[i], -s.s[i]);
  }
}

TEST(Symmetry, PointMassLateralDynamicsMirror) {
  EnvState s = at({0.4, -0.3, 0.1, 0.2});
  EnvState m = at({-0.4, -0.3, -0.1, 0.2});
  for (int t = 0; t < 30; ++t) {
    const double fa[] = {0.7, -0.2}, fm[] = {-0.7, -0.2};
    s = step(point(), s, fa).next;
    m = step(point(), m, fm).next;
    EXPECT_EQ(m.s[0], -s.s[0]);
    EXPECT_EQ(m.s[2], -s.s[2]);
    EXPECT_EQ(m.s[1], s.s[1]);
  }
}

TEST(Render, BinaryAndDeterministic) {
  for (const EnvSpec* spec : {&cartpole(), &mountain(), &point()}) {
    const EnvState s = reset(*spec, 9);
    const Frame f = render(*spec, s);
    EXPECT_EQ(f, render(*spec, s));
    for (auto px : f.pixels()) EXPECT_TRUE(px == 0 || px == 1);
    EXPECT_GT(f.count_on(), 0u);
  }
}

TEST(Render, PointMassOnGoalCoversGoalCentre) {
  const Frame f = render(point(), at({0.5, 0.5, 0.0, 0.0}));
  // Goal (0.5, 0.5) sits at pixel coordinates (48, 16).
  EXPECT_TRUE(f.on(16, 48));
  EXPECT_TRUE(f.on(15, 47));
  const Frame away = render(point(), at({-0.5, -0.5, 0.0, 0.0}));
  EXPECT_FALSE(away.on(16, 48));
  EXPECT_TRUE(away.on(16 - 5, 48));  // top of the goal ring
}

TEST(Render, UprightPoleIsVerticalBarAboveCart) {
  const Frame f = render(cartpole(), at({0, 0, 0, 0}));
  // Cart centred at column 32, its top at row 45; the pole reaches 24 px higher.
  for (std::size_t r = 22; r < 45; ++r) {
    EXPECT_TRUE(f.on(r, 31)) << r;
    EXPECT_TRUE(f.on(r, 32)) << r;
    EXPECT_FALSE(f.on(r, 29)) << r;
    EXPECT_FALSE(f.on(r, 34)) << r;
  }
  EXPECT_FALSE(f.on(19, 32));
  for (std::size_t c = 0; c < kFrameSide; ++c) EXPECT_TRUE(f.on(48, c));
  EXPECT_EQ(f, f.mirrored());
}

DemoSet sample_demos() {
  DemoSet d;
  d.env_id = "cartpole-balance";
  Rng rng(2);
  for (std::size_t len : {3u, 1u, 5u}) {
    std::vector<Frame> traj(len);
    for (auto& f : traj) {
      for (auto& px : f.pixels()) px = rng.uniform() < 0.1 ? 1 : 0;
    }
    d.trajectories.push_back(std::move(traj));
  }
  return d;
}

TEST(Demo, LayoutIsFramesOnly) {
  const DemoSet d = sample_demos();
  const std::string bytes = encode_demos(d);
  ByteReader r(bytes);
  EXPECT_EQ(r.bytes(4), "DEMO");
  EXPECT_EQ(r.u32(), 1u);
  EXPECT_EQ(r.bytes(r.u16()), "cartpole-balance");
  EXPECT_EQ(r.u32(), 3u);
  for (const auto& traj : d.trajectories) {
    ASSERT_EQ(r.u32(), traj.size());
    for (const Frame& f : traj) {
      const std::string_view payload = r.bytes(kFramePixels);
      for (std::size_t i = 0; i < kFramePixels; ++i) {
        EXPECT_EQ(static_cast<unsigned char>(payload[i]), f.pixels()[i] ? 255 : 0);
      }
    }
  }
  EXPECT_EQ(r.remaining(), 0u);
  EXPECT_EQ(d.total_frames(), 9u);
}

TEST(Demo, FileRoundTripIsBitExact) {
  const DemoSet d = sample_demos();
  const auto path = std::filesystem::temp_directory_path() / "pifo_env_test.demo";
  save_demos(d, path);
  const DemoSet back = load_demos(path);
  EXPECT_EQ(back.env_id, d.env_id);
  EXPECT_EQ(back.trajectories, d.trajectories);
  EXPECT_EQ(read_file(path), encode_demos(back));
  std::filesystem::remove(path);
}

TEST(Demo, MalformedInputsAreFormatErrors) {
  const std::string good = encode_demos(sample_demos());
  EXPECT_THROW(decode_demos("DEMX" + good.substr(4)), FormatError);
  EXPECT_THROW(decode_demos(good.substr(0, good.size() - 1)), FormatError);
  EXPECT_THROW(decode_demos(good + "x"), FormatError);
  std::string bad_pixel = good;
  bad_pixel[good.size() - 1] = 7;
  EXPECT_THROW(decode_demos(bad_pixel), FormatError);
  std::string v2 = good;
  v2[4] = 2;
  EXPECT_THROW(decode_demos(v2), FormatError);
}

}  // namespace
}  // namespace pifo::env
