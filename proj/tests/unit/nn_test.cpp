#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "oracles.hpp"
#include "pifo/bytes.hpp"
#include "pifo/errors.hpp"
#include "pifo/nn/adam.hpp"
#include "pifo/nn/autodiff.hpp"
#include "pifo/nn/checkpoint.hpp"
#include "pifo/nn/init.hpp"
#include "pifo/nn/kernels.hpp"

namespace pifo::nn {
namespace {

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  EXPECT_THROW(Tensor({2, 3}).reshaped({4, 2}), ShapeError);
  EXPECT_EQ(Tensor({2, 3}).reshaped({3, 2}).dims(), (Dims{3, 2}));
}

TEST(Tensor, StorageIsSixtyFourByteAligned) {
  std::vector<Tensor> held;
  for (std::size_t n = 1; n < 40; ++n) {
    held.emplace_back(Dims{n});
    held.emplace_back(Dims{n}, std::vector<double>(n, 1.0));
    held.push_back(held.back().reshaped({1, n}));
  }
  for (const auto& t : held) EXPECT_EQ(reinterpret_cast<std::uintptr_t>(t.raw()) % 64, 0u);
}

TEST(Dense, IdentityWeightsPassInputThrough) {
  const Tensor y = dense_forward(Tensor({1, 2}, {0.3, -0.7}), Tensor({2, 2}, {1, 0, 0, 1}), Tensor({2}));
  EXPECT_EQ(y.values(), (std::vector<double>{0.3, -0.7}));
}

TEST(Dense, ZeroInputGivesBias) {
  const Tensor y = dense_forward(Tensor({1, 3}), Tensor({2, 3}, 0.7), Tensor({2}, {0.25, -4.0}));
  EXPECT_EQ(y.values(), (std::vector<double>{0.25, -4.0}));
}

TEST(Dense, HandArithmetic) {
  const Tensor y = dense_forward(Tensor({1, 2}, {1, 1}), Tensor({2, 2}, {1, 2, 3, 4}), Tensor({2}, {1, 1}));
  EXPECT_EQ(y.values(), (std::vector<double>{4, 8}));
}

TEST(Dense, ShapeErrorNamesBothOperands) {
  try {
    dense_forward(Tensor({1, 3}), Tensor({2, 2}), Tensor({2}));
    FAIL();
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("[1,3]"), std::string::npos) << what;
    EXPECT_NE(what.find("[2,2]"), std::string::npos) << what;
  }
}

TEST(Conv, UnitKernelIsIdentity) {
  Rng rng(1);
  const Tensor x = oracle::random_tensor({2, 1, 5, 4}, rng);
  EXPECT_EQ(conv2d_forward(x, Tensor({1, 1, 1, 1}, 1.0), Tensor({1}), 1), x);
}

TEST(Conv, OnesKernelOnConstantField) {
  const Tensor y = conv2d_forward(Tensor({1, 1, 6, 6}, 0.5), Tensor({1, 1, 3, 3}, 1.0), Tensor({1}, {0.25}), 1);
  EXPECT_EQ(y.dims(), (Dims{1, 1, 4, 4}));
  for (double v : y.data()) EXPECT_EQ(v, 9 * 0.5 + 0.25);
}

TEST(Conv, MatchesNestedLoopsExactly) {
  Rng rng(2);
  const Tensor x = oracle::dyadic_tensor({1, 1, 8, 8}, rng);
  const Tensor k = oracle::dyadic_tensor({1, 1, 3, 3}, rng);
  const Tensor b = oracle::dyadic_tensor({1}, rng);
  EXPECT_EQ(conv2d_forward(x, k, b, 2), oracle::conv2d_naive(x, k, b, 2));
}

// Mostly-zero inputs take the scatter path; both paths must agree with the oracle.
TEST(Conv, SparseAndDenseInputsMatchOracle) {
  Rng rng(3);
  for (double zeros : {0.0, 0.5, 0.97}) {
    for (int i = 0; i < 10; ++i) {
      const std::size_t k = 1 + rng.below(4), stride = 1 + rng.below(4);
      const std::size_t side = k + rng.below(12);
      const Tensor x = oracle::dyadic_tensor({1 + rng.below(3), 1 + rng.below(3), side, side + rng.below(3)}, rng, zeros);
      const Tensor kernel = oracle::dyadic_tensor({1 + rng.below(4), x.dim(1), k, k}, rng);
      const Tensor bias = oracle::dyadic_tensor({kernel.dim(0)}, rng);
      EXPECT_EQ(conv2d_forward(x, kernel, bias, stride), oracle::conv2d_naive(x, kernel, bias, stride));
    }
  }
}

TEST(Conv, KernelGradientMatchesCorrelationOracle) {
  Rng rng(4);
  for (double zeros : {0.0, 0.95}) {
    const Tensor x = oracle::dyadic_tensor({3, 2, 12, 12}, rng, zeros);
    const Tensor kernel = oracle::dyadic_tensor({4, 2, 4, 4}, rng);
    const Tensor gout = oracle::dyadic_tensor({3, 4, 5, 5}, rng);
    Tensor gk(kernel.dims()), gb(Dims{4});
    conv2d_backward(x, kernel, gout, 2, nullptr, &gk, &gb);
    // d/dk of sum(gout * conv(x, k)) correlates x with gout.
    Tensor ref(kernel.dims());
    for (std::size_t co = 0; co < 4; ++co) {
      for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t ki = 0; ki < 4; ++ki) {
          for (std::size_t kj = 0; kj < 4; ++kj) {
            double acc = 0.0;
            for (std::size_t b = 0; b < 3; ++b) {
              for (std::size_t i = 0; i < 5; ++i) {
                for (std::size_t j = 0; j < 5; ++j) {
                  acc += gout[((b * 4 + co) * 5 + i) * 5 + j] * x[((b * 2 + c) * 12 + 2 * i + ki) * 12 + 2 * j + kj];
                }
              }
            }
            ref[((co * 2 + c) * 4 + ki) * 4 + kj] = acc;
          }
        }
      }
    }
    EXPECT_EQ(gk, ref) << "zero fraction " << zeros;
  }
}

TEST(Conv, KernelLargerThanInputIsShapeError) {
  EXPECT_THROW(conv2d_forward(Tensor({1, 1, 3, 3}), Tensor({1, 1, 4, 4}), Tensor({1}), 1), ShapeError);
  EXPECT_THROW(conv2d_forward(Tensor({1, 2, 5, 5}), Tensor({1, 1, 3, 3}), Tensor({1}), 1), ShapeError);
}

TEST(Activation, FixedPoints) {
  const Tensor x({3}, {0.0, -5.0, 5.0});
  EXPECT_EQ(activation_forward(x, Activation::kTanh)[0], 0.0);
  EXPECT_EQ(activation_forward(x, Activation::kRelu).values(), (std::vector<double>{0.0, 0.0, 5.0}));
  EXPECT_EQ(activation_forward(x, Activation::kSigmoid)[0], 0.5);
}

TEST(Activation, SigmoidStaysInsideOpenInterval) {
  const Tensor y = activation_forward(Tensor({4}, {-800.0, -40.0, 40.0, 800.0}), Activation::kSigmoid);
  for (double v : y.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Autodiff, LinearLossGradientIsInput) {
  ParamSet params;
  params.add("w", Tensor({3, 2}, {1, 2, 3, 4, 5, 6}));
  params.add("b", Tensor({3}));
  Tape tape;
  Var y = dense(tape.constant(Tensor({1, 2}, {0.5, -2.0})), tape.param(params, "w"), tape.param(params, "b"));
  tape.backward(sum(y), params);
  EXPECT_EQ(params.at("w").grad.values(), (std::vector<double>{0.5, -2.0, 0.5, -2.0, 0.5, -2.0}));
}

TEST(Autodiff, UnusedParameterGetsExactlyZero) {
  ParamSet params;
  params.add("used", Tensor({2}, 1.0));
  params.add("unused", Tensor({2}, 1.0));
  params.at("unused").grad.fill(7.0);
  Tape tape;
  tape.backward(sum(square(tape.param(params, "used"))), params);
  EXPECT_EQ(params.at("unused").grad.values(), (std::vector<double>{0.0, 0.0}));
  EXPECT_EQ(params.at("used").grad.values(), (std::vector<double>{2.0, 2.0}));
}

TEST(Autodiff, AccumulateAddsToExistingGradients) {
  ParamSet params;
  params.add("p", Tensor({1}, 3.0));
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    tape.backward(sum(tape.param(params, "p")), params, i > 0);
  }
  EXPECT_EQ(params.at("p").grad[0], 2.0);
}

TEST(Autodiff, BackwardWithoutRecordedForwardIsUsageError) {
  ParamSet params;
  params.add("p", Tensor({1}, 1.0));
  Tape tape;
  EXPECT_THROW(tape.backward(Var{}, params), UsageError);
  Tape other;
  Var foreign = sum(other.param(params, "p"));
  EXPECT_THROW(tape.backward(foreign, params), UsageError);
}

TEST(Autodiff, NonScalarLossIsUsageError) {
  ParamSet params;
  params.add("p", Tensor({2}, 1.0));
  Tape tape;
  EXPECT_THROW(tape.backward(tape.param(params, "p"), params), UsageError);
}

TEST(Autodiff, TwoLayerNetMatchesFiniteDifferences) {
  Rng rng(5);
  ParamSet params;
  params.add("w0", oracle::random_tensor({5, 3}, rng));
  params.add("b0", oracle::random_tensor({5}, rng));
  params.add("w1", oracle::random_tensor({2, 5}, rng));
  params.add("b1", oracle::random_tensor({2}, rng));
  const Tensor x = oracle::random_tensor({4, 3}, rng);
  const auto check = oracle::check_gradients(params, [&](Tape& t, ParamSet& p) {
    Var h = tanh(dense(t.constant(x), t.param(p, "w0"), t.param(p, "b0")));
    return sum(square(dense(h, t.param(p, "w1"), t.param(p, "b1"))));
  });
  EXPECT_EQ(check.components, 15u + 5 + 10 + 2);
  EXPECT_LT(check.worst, oracle::kFdTolerance);
}

TEST(Autodiff, ElementwiseOpsMatchFiniteDifferences) {
  Rng rng(6);
  ParamSet params;
  params.add("a", oracle::random_tensor({6}, rng, 0.2, 2.0));
  params.add("b", oracle::random_tensor({6}, rng, -2.0, -0.2));
  const auto check = oracle::check_gradients(params, [](Tape& t, ParamSet& p) {
    Var a = t.param(p, "a"), b = t.param(p, "b");
    Var mixed = add(mul(exp(scale(b, 0.5)), log(a)), sub(minimum(a, add_scalar(scale(b, -1.0), 0.3)), clamp(b, -1.5, -0.5)));
    return mean(add_scalar(reshape(mixed, {2, 3}), 1.0));
  });
  EXPECT_LT(check.worst, oracle::kFdTolerance);
}

TEST(Adam, ZeroGradientLeavesParametersAndCountsStep) {
  ParamSet params;
  params.add("p", Tensor({3}, {1.0, -2.0, 0.5}));
  AdamState state(params, {});
  adam_step(params, state);
  EXPECT_EQ(params.at("p").value.values(), (std::vector<double>{1.0, -2.0, 0.5}));
  EXPECT_EQ(state.step(), 1u);
}

TEST(Adam, FirstStepIsSignScaledByLearningRate) {
  ParamSet params;
  params.add("p", Tensor({2}, {0.0, 0.0}));
  params.at("p").grad = Tensor({2}, {3.0, -0.01});
  AdamState state(params, {.learning_rate = 0.1});
  adam_step(params, state);
  EXPECT_NEAR(params.at("p").value[0], -0.1, 1e-8);
  EXPECT_NEAR(params.at("p").value[1], 0.1, 1e-6);
}

TEST(Adam, MatchesScalarRecurrence) {
  const AdamConfig cfg{.learning_rate = 0.05, .beta1 = 0.8, .beta2 = 0.95, .epsilon = 1e-6};
  ParamSet params;
  params.add("p", Tensor({1}, {0.7}));
  AdamState state(params, cfg);
  const double grads[] = {0.3, -1.2, 0.05, 2.0, -0.4};
  double theta = 0.7, m = 0.0, v = 0.0;
  for (int t = 1; t <= 5; ++t) {
    const double g = grads[t - 1];
    params.at("p").grad[0] = g;
    adam_step(params, state);
    m = cfg.beta1 * m + (1 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1 - cfg.beta2) * g * g;
    const double m_hat = m / (1 - std::pow(cfg.beta1, t));
    const double v_hat = v / (1 - std::pow(cfg.beta2, t));
    theta -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    EXPECT_NEAR(params.at("p").value[0], theta, 1e-15) << "step " << t;
  }
  EXPECT_EQ(state.step(), 5u);
  EXPECT_EQ(params.at("p").grad[0], grads[4]);
}

TEST(Adam, MismatchedMomentsAreStateError) {
  ParamSet a;
  a.add("p", Tensor({2}));
  ParamSet b;
  b.add("p", Tensor({3}));
  AdamState state(a, {});
  EXPECT_THROW(adam_step(b, state), StateError);
}

TEST(Init, SameSeedIsBitIdentical) {
  const LayerSpec layers[] = {LayerSpec::dense("a", 5, 7), LayerSpec::conv("c", 2, 3, 4)};
  EXPECT_EQ(encode_checkpoint(init_params(layers, 9)), encode_checkpoint(init_params(layers, 9)));
  EXPECT_NE(encode_checkpoint(init_params(layers, 9)), encode_checkpoint(init_params(layers, 10)));
}

TEST(Init, BiasesZeroWeightsBoundedAndCentered) {
  const LayerSpec layers[] = {LayerSpec::dense("big", 25, 4000)};
  const ParamSet p = init_params(layers, 3);
  for (double b : p.at("big/b").value.data()) EXPECT_EQ(b, 0.0);
  const auto& w = p.at("big/w").value;
  ASSERT_EQ(w.size(), 100000u);
  const double bound = std::sqrt(1.0 / 25.0);
  double sum = 0.0;
  for (double v : w.data()) {
    EXPECT_LE(std::abs(v), bound);
    EXPECT_EQ(v, static_cast<double>(static_cast<float>(v)));
    sum += v;
  }
  const double sigma = bound / std::sqrt(3.0);
  EXPECT_LT(std::abs(sum / 1e5), 3.0 * sigma / std::sqrt(1e5));
}

class CheckpointFile : public ::testing::Test {
 protected:
  std::filesystem::path path = std::filesystem::temp_directory_path() / "pifo_nn_test.pifo";
  void TearDown() override { std::filesystem::remove(path); }
};

TEST_F(CheckpointFile, RoundTripIsBitIdentical) {
  Rng rng(7);
  ParamSet p;
  p.add("policy/l0/w", Tensor({3, 2}));
  p.add("scalar", Tensor({1}));
  p.add("img", Tensor({2, 1, 2, 2}));
  for (auto& e : p.entries()) {
    for (auto& v : e.value.data()) v = static_cast<float>(rng.normal());
  }
  save_checkpoint(p, path);
  const ParamSet q = load_checkpoint(path);
  ASSERT_EQ(q.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(q.entry(i).name, p.entry(i).name);
    EXPECT_EQ(q.entry(i).value, p.entry(i).value);
  }
  EXPECT_EQ(read_file(path), encode_checkpoint(q));
}

TEST_F(CheckpointFile, LayoutMatchesFormat) {
  ParamSet p;
  p.add("ab", Tensor({2}, {1.0, -0.5}));
  const std::string bytes = encode_checkpoint(p);
  ASSERT_EQ(bytes.size(), 4u + 4 + 4 + 2 + 2 + 1 + 4 + 2 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "PIFO");
  ByteReader r(bytes);
  r.bytes(4);
  EXPECT_EQ(r.u32(), 1u);
  EXPECT_EQ(r.u32(), 1u);
  EXPECT_EQ(r.u16(), 2u);
  EXPECT_EQ(r.bytes(2), "ab");
  EXPECT_EQ(r.u8(), 1u);
  EXPECT_EQ(r.u32(), 2u);
  EXPECT_EQ(r.f32(), 1.0f);
  EXPECT_EQ(r.f32(), -0.5f);
}

TEST_F(CheckpointFile, DistinctLoadErrors) {
  ParamSet p;
  p.add("w", Tensor({4}, 1.0));
  const std::string good = encode_checkpoint(p);
  auto kind_of = [&](const std::string& bytes) {
    write_file(path, bytes);
    try {
      load_checkpoint(path);
    } catch (const CheckpointError& e) {
      return e.kind();
    }
    ADD_FAILURE() << "no error";
    return CheckpointError::Kind::kIo;
  };
  EXPECT_EQ(kind_of("XXXX" + good.substr(4)), CheckpointError::Kind::kBadMagic);
  std::string v2 = good;
  v2[4] = 2;
  EXPECT_EQ(kind_of(v2), CheckpointError::Kind::kUnsupportedVersion);
  EXPECT_EQ(kind_of(good.substr(0, good.size() - 6)), CheckpointError::Kind::kTruncated);
  std::filesystem::remove(path);
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
}

}  // namespace
}  // namespace pifo::nn
