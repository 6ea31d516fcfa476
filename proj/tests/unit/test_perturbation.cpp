#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sal/perturbation.hpp"
#include "sal/rng.hpp"

using namespace sal;

namespace {

ParameterSet three_layers() {
  ParameterSet p;
  p.add("a", Tensor({2, 2}, {1.0, -2.0, 3.0, 0.5}));
  p.add("b", Tensor({3}, {0.25, 0.5, 0.75}));
  p.add("c", Tensor({2}, {1.0, 1.0}));
  p.add("d", Tensor({1}, {4.0}));
  return p;
}

double sample_std(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST(NoiseScale, HalfYieldStress) {
  EXPECT_DOUBLE_EQ(noise_scale(0.005, SalConfig{}), 7.5e-8);
}

TEST(NoiseScale, AtYield) { EXPECT_DOUBLE_EQ(noise_scale(0.01, SalConfig{}), 2.0e-7); }

TEST(NoiseScale, ZeroStress) { EXPECT_EQ(noise_scale(0.0, SalConfig{}), 0.0); }

TEST(NoiseScale, RejectsBadInputs) {
  SalConfig c;
  c.s_yield = 0.0;
  EXPECT_THROW(noise_scale(0.01, c), ConfigError);
  EXPECT_THROW(noise_scale(-1.0, SalConfig{}), ConfigError);
}

TEST(NoiseScale, StrictlyIncreasingBelowYieldAndAffineAbove) {
  const SalConfig c;
  double prev = noise_scale(0.0, c);
  for (int i = 1; i < 1000; ++i) {
    const double s = c.s_yield * i / 1000.0;
    const double v = noise_scale(s, c);
    ASSERT_GT(v, prev);
    prev = v;
  }
  for (double s : {0.01, 0.02, 0.3, 1.0}) {
    EXPECT_EQ(noise_scale(s, c), c.delta + c.lambda * s);
  }
}

TEST(InjectNoise, ZeroSigmaIsIdentity) {
  auto p = three_layers();
  const auto before = p;
  Rng rng(1);
  inject_noise(p, 0.0, rng);
  EXPECT_TRUE(bitwise_equal(p, before));
}

TEST(InjectNoise, SingleWeightGetsFirstDraw) {
  ParameterSet p;
  p.add("w", Tensor({1}, {1.0}));
  Rng rng(42);
  inject_noise(p, 1.0, rng);
  EXPECT_DOUBLE_EQ(p[0].tensor.values[0], 1.0 + -0.481217699801845);
}

TEST(InjectNoise, SampleStdMatchesSigma) {
  ParameterSet p;
  p.add("w", Tensor({10000}));
  Rng rng(9);
  inject_noise(p, 2e-7, rng);
  EXPECT_NEAR(sample_std(p[0].tensor.values), 2e-7, 0.05 * 2e-7);
}

TEST(InjectNoise, TouchesEveryTrainableEntryOnly) {
  auto p = three_layers();
  p.at("b").trainable = false;
  const auto before = p;
  Rng rng(4);
  const auto touched = inject_noise(p, 0.1, rng);
  EXPECT_EQ(touched, (std::vector<std::string>{"a", "c", "d"}));
  EXPECT_EQ(p.at("b").tensor.values, before.at("b").tensor.values);
  for (const char* name : {"a", "c", "d"}) {
    const auto& now = p.at(name).tensor.values;
    const auto& was = before.at(name).tensor.values;
    for (std::size_t i = 0; i < now.size(); ++i) EXPECT_NE(now[i], was[i]);
  }
}

TEST(InjectNoise, DeterministicGivenSeed) {
  auto p = three_layers();
  auto q = three_layers();
  Rng r1(77), r2(77);
  inject_noise(p, 0.3, r1);
  inject_noise(q, 0.3, r2);
  EXPECT_TRUE(bitwise_equal(p, q));
}

TEST(InjectNoise, RejectsNonFiniteSigma) {
  auto p = three_layers();
  Rng rng(1);
  EXPECT_THROW(inject_noise(p, std::numeric_limits<double>::infinity(), rng), NumericError);
}

TEST(PlasticDeform, ContractsWithoutNoise) {
  ParameterSet p;
  p.add("w", Tensor({5}, 1.0));
  SalConfig c;
  c.plastic_noise_param = 0.0;
  c.plastic_layer_count = 1;
  Rng rng(1);
  plastic_deform(p, c, rng);
  for (double v : p[0].tensor.values) EXPECT_EQ(v, 0.9);
}

TEST(PlasticDeform, OnlyTailLayersChange) {
  auto p = three_layers();
  const auto before = p;
  Rng rng(2);
  const auto out = plastic_deform(p, SalConfig{}, rng);
  EXPECT_EQ(out.layers, (std::vector<std::string>{"b", "c", "d"}));
  EXPECT_EQ(p.at("a").tensor.values, before.at("a").tensor.values);
  EXPECT_FALSE(out.fewer_layers_than_requested);
  EXPECT_TRUE(bitwise_equal(out.snapshot.params, before));
}

TEST(PlasticDeform, SkipsFrozenEntriesWhenCountingTail) {
  auto p = three_layers();
  p.at("d").trainable = false;
  const auto before = p;
  Rng rng(2);
  const auto out = plastic_deform(p, SalConfig{}, rng);
  EXPECT_EQ(out.layers, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(p.at("d").tensor.values, before.at("d").tensor.values);
}

TEST(PlasticDeform, NoiseStdMatchesConfig) {
  ParameterSet p;
  p.add("w", Tensor({10000}));
  SalConfig c;
  c.plastic_layer_count = 1;
  Rng rng(3);
  plastic_deform(p, c, rng);
  EXPECT_NEAR(sample_std(p[0].tensor.values), 0.02, 0.05 * 0.02);
}

TEST(PlasticDeform, VarianceInterpretation) {
  SalConfig c;
  c.plastic_noise_is_std = false;
  EXPECT_DOUBLE_EQ(plastic_noise_std(c), std::sqrt(0.02));
}

TEST(PlasticDeform, TooFewLayersDeformsAllAndFlags) {
  ParameterSet p;
  p.add("only", Tensor({3}, 1.0));
  Rng rng(5);
  const auto out = plastic_deform(p, SalConfig{}, rng);
  EXPECT_TRUE(out.fewer_layers_than_requested);
  EXPECT_EQ(out.layers, std::vector<std::string>{"only"});
}

TEST(PlasticDeform, SnapshotRecordsPreEventMetrics) {
  auto p = three_layers();
  Rng rng(5);
  const auto out = plastic_deform(p, SalConfig{}, rng, {0.7, 0.4, 19});
  EXPECT_EQ(out.snapshot.pre_event_loss, 0.7);
  EXPECT_EQ(out.snapshot.pre_event_accuracy, 0.4);
  EXPECT_EQ(out.snapshot.event_epoch, 19);
}

TEST(ShouldRevert, WorseLossAfterPatience) {
  YieldSnapshot snap{ParameterSet{}, 1.0, 0.5, 10};
  EXPECT_TRUE(should_revert({1.10, 0.5, 11}, snap, SalConfig{}));
}

TEST(ShouldRevert, ImprovementDoesNotRevert) {
  YieldSnapshot snap{ParameterSet{}, 1.0, 0.5, 10};
  EXPECT_FALSE(should_revert({0.95, 0.5, 11}, snap, SalConfig{}));
}

TEST(ShouldRevert, PatienceGate) {
  YieldSnapshot snap{ParameterSet{}, 1.0, 0.5, 10};
  SalConfig c;
  c.revert_patience = 3;
  EXPECT_FALSE(should_revert({2.0, 0.5, 11}, snap, c));
  EXPECT_FALSE(should_revert({2.0, 0.5, 12}, snap, c));
  EXPECT_TRUE(should_revert({2.0, 0.5, 13}, snap, c));
}

TEST(RevertToYield, RestoresExactWeights) {
  auto p = three_layers();
  const auto before = p;
  Rng rng(8);
  auto out = plastic_deform(p, SalConfig{}, rng);
  ASSERT_FALSE(bitwise_equal(p, before));
  std::optional<YieldSnapshot> snap = out.snapshot;
  const auto ev = revert_to_yield(p, snap, 12, 0.005);
  EXPECT_TRUE(bitwise_equal(p, before));
  EXPECT_EQ(ev.kind, InterventionKind::Revert);
  EXPECT_EQ(ev.epoch, 12);
  revert_to_yield(p, snap);
  EXPECT_TRUE(bitwise_equal(p, before));
}

TEST(RevertToYield, RequiresSnapshotAndMatchingLayout) {
  auto p = three_layers();
  EXPECT_THROW(revert_to_yield(p, std::nullopt), Error);
  ParameterSet other;
  other.add("a", Tensor({4}));
  std::optional<YieldSnapshot> snap = YieldSnapshot{other, 1.0, 0.0, 1};
  EXPECT_THROW(revert_to_yield(p, snap), ShapeError);
}
