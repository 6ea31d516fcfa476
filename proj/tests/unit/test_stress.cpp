#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sal/rng.hpp"
#include "sal/stress.hpp"

using namespace sal;

namespace {

EpochMetrics m(double loss, double acc, int epoch) { return {loss, acc, epoch}; }

}  // namespace

TEST(SalConfig, DefaultsMatchPublishedSettings) {
  const SalConfig c;
  EXPECT_EQ(c.rho, 0.0005);
  EXPECT_EQ(c.theta, 0.005);
  EXPECT_EQ(c.s_noise, 0.005);
  EXPECT_EQ(c.s_yield, 0.01);
  EXPECT_EQ(c.delta, 1e-7);
  EXPECT_EQ(c.lambda, 1e-5);
  EXPECT_EQ(c.warmup_epochs, 15);
  EXPECT_EQ(c.plastic_layer_count, 3);
  EXPECT_EQ(c.plastic_retain, 0.9);
  EXPECT_EQ(c.plastic_noise_param, 0.02);
  EXPECT_TRUE(c.plastic_noise_is_std);
  EXPECT_EQ(c.s_max, 1.0);
  EXPECT_EQ(c.eps_loss, 1e-4);
  EXPECT_EQ(c.eps_acc, 1e-4);
  EXPECT_NO_THROW(c.validate());
}

TEST(SalConfig, RejectsBrokenThresholdOrdering) {
  SalConfig c;
  c.s_noise = 0.02;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SalConfig{};
  c.s_yield = 2.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SalConfig{};
  c.plastic_layer_count = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_NO_THROW(SalConfig::disabled().validate());
}

TEST(IsImprovement, BothConditionsHold) {
  EXPECT_TRUE(is_improvement(m(0.90, 0.55, 2), m(1.0, 0.50, 1), SalConfig{}));
}

TEST(IsImprovement, AccuracyGainZeroIsNotEnough) {
  EXPECT_FALSE(is_improvement(m(0.99, 0.50, 2), m(1.0, 0.50, 1), SalConfig{}));
}

TEST(IsImprovement, LossConditionIsRequired) {
  EXPECT_FALSE(is_improvement(m(1.0, 0.60, 2), m(1.0, 0.50, 1), SalConfig{}));
}

TEST(IsImprovement, LossOnlyWhenAccuracyConditionDisabled) {
  SalConfig c;
  c.accuracy_condition_enabled = false;
  EXPECT_TRUE(is_improvement(m(0.99, 0.50, 2), m(1.0, 0.50, 1), c));
  EXPECT_FALSE(is_improvement(m(1.0 - 1e-4, 0.9, 2), m(1.0, 0.50, 1), c));
}

TEST(IsImprovement, ThresholdsAreStrict) {
  SalConfig c;
  c.eps_loss = 0.25;
  c.eps_acc = 0.25;
  EXPECT_FALSE(is_improvement(m(0.75, 0.75, 2), m(1.0, 0.5, 1), c));
  EXPECT_TRUE(is_improvement(m(0.74, 0.76, 2), m(1.0, 0.5, 1), c));
}

TEST(IsImprovement, FirstEpochAgainstInitialSentinel) {
  EXPECT_TRUE(is_improvement(m(5.0, 0.1, 1), EpochMetrics::initial(), SalConfig{}));
  EXPECT_FALSE(is_improvement(m(5.0, 0.0, 1), EpochMetrics::initial(), SalConfig{}));
}

TEST(IsImprovement, RejectsNonFinite) {
  EXPECT_THROW(is_improvement(m(std::nan(""), 0.5, 2), m(1.0, 0.5, 1), SalConfig{}), NumericError);
  EXPECT_THROW(is_improvement(m(std::numeric_limits<double>::infinity(), 0.5, 2), m(1.0, 0.5, 1),
                              SalConfig{}),
               NumericError);
}

TEST(UpdateStress, GrowsByTheta) {
  StressState s;
  s.s_g = 0.004;
  EXPECT_DOUBLE_EQ(update_stress(s, false, SalConfig{}).s_g, 0.009);
}

TEST(UpdateStress, ClampsAtZero) {
  StressState s;
  s.s_g = 0.0003;
  EXPECT_EQ(update_stress(s, true, SalConfig{}).s_g, 0.0);
}

TEST(UpdateStress, ClampsAtMax) {
  StressState s;
  s.s_g = 0.998;
  EXPECT_EQ(update_stress(s, false, SalConfig{}).s_g, 1.0);
}

TEST(UpdateStress, RecordsEpochAndKeepsMax) {
  StressState s(0.5);
  const auto t = update_stress(s, false, SalConfig{}, 12);
  EXPECT_EQ(t.last_update_epoch, 12);
  EXPECT_EQ(t.s_max, 0.5);
}

TEST(UpdateStress, RandomSequencesStayClampedWithExactSteps) {
  const SalConfig c;
  Rng rng(2024);
  for (int seq = 0; seq < 200; ++seq) {
    StressState s;
    for (int e = 1; e <= 500; ++e) {
      const bool improved = rng.uniform() < 0.3;
      const double before = s.s_g;
      s = update_stress(s, improved, c, e);
      ASSERT_GE(s.s_g, 0.0);
      ASSERT_LE(s.s_g, s.s_max);
      if (improved && before >= c.rho) {
        ASSERT_EQ(s.s_g, before - c.rho);
      } else if (!improved && before + c.theta <= s.s_max) {
        ASSERT_EQ(s.s_g, before + c.theta);
      }
    }
  }
}

TEST(UpdateStress, ConsecutiveStagnation) {
  const SalConfig c;
  StressState s;
  for (int k = 1; k <= 250; ++k) {
    s = update_stress(s, false, c, k);
    const double expected = std::min(1.0, k * c.theta);
    ASSERT_NEAR(s.s_g, expected, 1e-12) << "k=" << k;
  }
  EXPECT_EQ(s.s_g, 1.0);
}

TEST(ClassifyRegime, WarmupTakesPrecedence) {
  StressState s;
  s.s_g = 0.02;
  EXPECT_EQ(classify_regime(s, 10, SalConfig{}), Regime::Warmup);
  EXPECT_EQ(classify_regime(s, 15, SalConfig{}), Regime::Warmup);
}

TEST(ClassifyRegime, NoiseZone) {
  StressState s;
  s.s_g = 0.007;
  EXPECT_EQ(classify_regime(s, 20, SalConfig{}), Regime::NoiseZone);
}

TEST(ClassifyRegime, PlasticZone) {
  StressState s;
  s.s_g = 0.012;
  EXPECT_EQ(classify_regime(s, 20, SalConfig{}), Regime::PlasticZone);
  s.s_g = 0.01;
  EXPECT_EQ(classify_regime(s, 20, SalConfig{}), Regime::PlasticZone);
}

TEST(ClassifyRegime, BoundaryOfNoiseZoneIsElastic) {
  StressState s;
  s.s_g = 0.005;
  EXPECT_EQ(classify_regime(s, 16, SalConfig{}), Regime::Elastic);
}

TEST(ClassifyRegime, MonotoneInStress) {
  const SalConfig c;
  int prev = 0;
  for (int i = 0; i <= 2000; ++i) {
    StressState s;
    s.s_g = i * 1e-5;
    const int r = static_cast<int>(classify_regime(s, 16, c));
    ASSERT_GE(r, prev);
    prev = r;
  }
  EXPECT_EQ(prev, static_cast<int>(Regime::PlasticZone));
}
