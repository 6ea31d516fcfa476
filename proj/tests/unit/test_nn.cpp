#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "sal/nn.hpp"
#include "sal/rng.hpp"

using namespace sal;
using namespace sal::nn;

namespace {

MlpSpec spec_of(std::vector<std::size_t> widths, OutputKind out = OutputKind::Softmax,
                Activation act = Activation::Relu, std::uint64_t seed = 1) {
  MlpSpec s;
  s.widths = std::move(widths);
  s.activations = {act};
  s.output = out;
  s.seed = seed;
  return s;
}

Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng.normal();
  return m;
}

}  // namespace

TEST(InitMlp, DeterministicForSeed) {
  const auto s = spec_of({2, 3, 1});
  EXPECT_TRUE(bitwise_equal(init_mlp(s), init_mlp(s)));
  auto other = s;
  other.seed = 2;
  EXPECT_FALSE(bitwise_equal(init_mlp(s), init_mlp(other)));
}

TEST(InitMlp, ParameterCount) { EXPECT_EQ(init_mlp(spec_of({2, 3, 1})).element_count(), 13U); }

TEST(InitMlp, BiasesAreZeroAndNamesOrdered) {
  const auto p = init_mlp(spec_of({4, 5, 3, 2}));
  ASSERT_EQ(p.size(), 6U);
  EXPECT_EQ(p[0].name, "dense0.kernel");
  EXPECT_EQ(p[1].name, "dense0.bias");
  EXPECT_EQ(p[5].name, "dense2.bias");
  for (std::size_t i = 1; i < p.size(); i += 2) {
    for (double b : p[i].tensor.values) EXPECT_EQ(b, 0.0);
  }
}

TEST(InitMlp, KernelScaleFollowsFanIn) {
  const auto p = init_mlp(spec_of({400, 300, 2}));
  const auto& w = p[0].tensor.values;
  double ss = 0.0;
  for (double v : w) ss += v * v;
  EXPECT_NEAR(std::sqrt(ss / static_cast<double>(w.size())), 1.0 / 20.0, 0.05 / 20.0);
}

TEST(InitMlp, RejectsBadSpec) {
  EXPECT_THROW(init_mlp(spec_of({2})), ConfigError);
  EXPECT_THROW(init_mlp(spec_of({2, 0, 1})), ConfigError);
}

TEST(Forward, ZeroWeightsIdentityOutputIsZero) {
  const auto s = spec_of({3, 4, 2}, OutputKind::Identity);
  auto p = init_mlp(s).zeros_like();
  Rng rng(1);
  const auto out = forward(p, s, random_matrix(5, 3, rng)).predictions;
  for (double v : out.data) EXPECT_EQ(v, 0.0);
}

TEST(Forward, ZeroWeightsSoftmaxIsUniform) {
  const auto s = spec_of({3, 4, 7});
  auto p = init_mlp(s).zeros_like();
  Rng rng(1);
  const auto out = forward(p, s, random_matrix(5, 3, rng)).predictions;
  for (double v : out.data) EXPECT_DOUBLE_EQ(v, 1.0 / 7.0);
}

TEST(Forward, SingleAffineLayer) {
  const auto s = spec_of({1, 1}, OutputKind::Identity);
  ParameterSet p;
  p.add("dense0.kernel", Tensor({1, 1}, {2.0}));
  p.add("dense0.bias", Tensor({1}, {1.0}));
  Matrix x(1, 1);
  x(0, 0) = 3.0;
  EXPECT_EQ(forward(p, s, x).predictions(0, 0), 7.0);
}

TEST(Forward, SoftmaxRowsSumToOne) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = spec_of({4, 8, 5}, OutputKind::Softmax, Activation::Tanh, 100 + trial);
    auto p = init_mlp(s);
    for (auto& e : p) {
      for (double& v : e.tensor.values) v *= 5.0;
    }
    const auto out = forward(p, s, random_matrix(16, 4, rng)).predictions;
    for (std::size_t i = 0; i < out.rows; ++i) {
      double sum = 0.0;
      for (double v : out.row(i)) sum += v;
      ASSERT_NEAR(sum, 1.0, 1e-12);
    }
  }
}

TEST(Forward, RejectsWrongInputWidth) {
  const auto s = spec_of({3, 2});
  EXPECT_THROW(forward(init_mlp(s), s, Matrix(2, 4)), ShapeError);
}

TEST(Forward, CacheHasOneEntryPerLayer) {
  const auto s = spec_of({3, 4, 4, 2});
  const auto r = forward(init_mlp(s), s, Matrix(2, 3));
  EXPECT_EQ(r.cache.inputs.size(), 3U);
  EXPECT_EQ(r.cache.pre_activations.size(), 3U);
}

TEST(Loss, PerfectPredictionHasZeroCrossEntropy) {
  const auto s = spec_of({1, 2}, OutputKind::Softmax);
  ParameterSet p;
  p.add("dense0.kernel", Tensor({1, 2}, {0.0, 0.0}));
  p.add("dense0.bias", Tensor({2}, {800.0, -800.0}));
  Batch b{Matrix(1, 1), {0}, {}};
  EXPECT_NEAR(loss_and_grad(p, s, b, LossKind::CrossEntropy).loss, 0.0, 1e-9);
}

TEST(Loss, UniformPredictionOverTenClasses) {
  const auto s = spec_of({2, 10});
  auto p = init_mlp(s).zeros_like();
  Batch b{Matrix(3, 2), {0, 4, 9}, {}};
  EXPECT_NEAR(loss_and_grad(p, s, b, LossKind::CrossEntropy).loss, std::log(10.0), 1e-12);
  EXPECT_NEAR(std::log(10.0), 2.302585, 1e-6);
}

TEST(Loss, MseOnOneHotLabels) {
  const auto s = spec_of({1, 2}, OutputKind::Identity);
  auto p = init_mlp(s).zeros_like();
  Batch b{Matrix(2, 1), {0, 1}, {}};
  EXPECT_DOUBLE_EQ(loss_and_grad(p, s, b, LossKind::Mse).loss, 0.5);
}

TEST(Loss, GradientsHaveParameterLayout) {
  const auto s = spec_of({3, 5, 2});
  const auto p = init_mlp(s);
  Rng rng(2);
  Batch b{random_matrix(4, 3, rng), {0, 1, 1, 0}, {}};
  EXPECT_TRUE(loss_and_grad(p, s, b, LossKind::CrossEntropy).grads.same_layout(p));
}

TEST(Loss, RejectsLabelOutOfRangeAndEmptyBatch) {
  const auto s = spec_of({1, 2});
  const auto p = init_mlp(s);
  EXPECT_THROW(loss_and_grad(p, s, Batch{Matrix(1, 1), {2}, {}}, LossKind::CrossEntropy), ShapeError);
  EXPECT_THROW(loss_and_grad(p, s, Batch{Matrix(0, 1), {}, {}}, LossKind::CrossEntropy), ShapeError);
}

TEST(Loss, LargeLogitsStayFinite) {
  const auto s = spec_of({1, 3});
  ParameterSet p;
  p.add("dense0.kernel", Tensor({1, 3}, {1e4, -1e4, 0.0}));
  p.add("dense0.bias", Tensor({3}));
  Matrix x(1, 1);
  x(0, 0) = 1.0;
  const auto r = loss_and_grad(p, s, Batch{x, {1}, {}}, LossKind::CrossEntropy);
  EXPECT_NEAR(r.loss, 2e4, 1e-6);
}

// Central finite differences (h = 1e-5) against backprop on random draws.
TEST(Loss, GradientMatchesFiniteDifferences) {
  Rng rng(777);
  double worst = 0.0;
  for (int draw = 0; draw < 20; ++draw) {
    std::vector<std::size_t> widths{1 + rng.below(4)};
    const std::size_t hidden_layers = 1 + rng.below(2);
    for (std::size_t h = 0; h < hidden_layers; ++h) widths.push_back(2 + rng.below(6));
    widths.push_back(2 + rng.below(3));
    const auto out = draw % 3 == 2 ? OutputKind::Identity : OutputKind::Softmax;
    const auto act = draw % 2 == 0 ? Activation::Tanh : Activation::Relu;
    const auto kind = draw % 3 == 0 ? LossKind::CrossEntropy : LossKind::Mse;
    const auto s = spec_of(widths, out, act, rng.next_u64());
    auto p = init_mlp(s);
    for (auto& e : p) {
      for (double& v : e.tensor.values) v += 0.1 * rng.normal();
    }
    const std::size_t n = 2 + rng.below(6);
    Batch b{random_matrix(n, widths.front(), rng), {}, {}};
    for (std::size_t i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(rng.below(widths.back())));
    if (kind == LossKind::Mse && draw % 2 == 1) b.targets = random_matrix(n, widths.back(), rng);

    const auto analytic = loss_and_grad(p, s, b, kind).grads.flatten();
    auto flat = p.flatten();
    const double h = 1e-5;
    for (std::size_t i = 0; i < flat.size(); ++i) {
      const double w0 = flat[i];
      flat[i] = w0 + h;
      p.assign_flat(flat);
      const double up = loss_and_grad(p, s, b, kind).loss;
      flat[i] = w0 - h;
      p.assign_flat(flat);
      const double down = loss_and_grad(p, s, b, kind).loss;
      flat[i] = w0;
      p.assign_flat(flat);
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max(1e-6, std::abs(analytic[i]) + std::abs(numeric));
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Loss, PureFunction) {
  const auto s = spec_of({2, 4, 3});
  const auto p = init_mlp(s);
  Rng rng(5);
  Batch b{random_matrix(6, 2, rng), {0, 1, 2, 0, 1, 2}, {}};
  const auto a = loss_and_grad(p, s, b, LossKind::CrossEntropy);
  const auto c = loss_and_grad(p, s, b, LossKind::CrossEntropy);
  EXPECT_EQ(a.loss, c.loss);
  EXPECT_TRUE(bitwise_equal(a.grads, c.grads));
}

TEST(Accuracy, AllNoneAndPartial) {
  Matrix pred(4, 2);
  for (std::size_t i = 0; i < 4; ++i) pred(i, 0) = 1.0;
  EXPECT_EQ(accuracy(pred, std::vector<int>{0, 0, 0, 0}), 1.0);
  EXPECT_EQ(accuracy(pred, std::vector<int>{1, 1, 1, 1}), 0.0);
  EXPECT_EQ(accuracy(pred, std::vector<int>{0, 0, 0, 1}), 0.75);
}

TEST(Accuracy, TiesGoToLowestIndex) {
  Matrix pred(1, 3);
  pred(0, 1) = 0.5;
  pred(0, 2) = 0.5;
  EXPECT_EQ(accuracy(pred, std::vector<int>{1}), 1.0);
  EXPECT_EQ(accuracy(pred, std::vector<int>{2}), 0.0);
}

TEST(Accuracy, EmptyBatchIsAnError) { EXPECT_THROW(accuracy(Matrix(0, 2), std::vector<int>{}), Error); }
