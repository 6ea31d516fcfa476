#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "sal/error.hpp"

namespace sal {

/// Every stress-aware-learning hyperparameter.
///
/// Defaults are the published settings: rho 5e-4, theta 5e-3, noise
/// threshold 5e-3, yield threshold 1e-2, base noise 1e-7, stress
/// sensitivity 1e-5, 15 warm-up epochs, plastic deformation of the last
/// three trainable entries as w <- 0.9 w + N(0, 0.02).
struct SalConfig {
  double rho = 0.0005;    // stress decay per improving epoch
  double theta = 0.005;   // stress growth per stagnant epoch
  double eps_loss = 1e-4;
  double eps_acc = 1e-4;  // fraction units
  double s_noise = 0.005;
  double s_yield = 0.01;
  double s_max = 1.0;
  double delta = 1e-7;    // base noise level
  double lambda = 1e-5;   // stress sensitivity
  int warmup_epochs = 15;
  int plastic_layer_count = 3;
  double plastic_retain = 0.9;
  double plastic_noise_param = 0.02;
  bool plastic_noise_is_std = true;
  bool accuracy_condition_enabled = true;

  // Failure recovery.
  double revert_tolerance = 0.05;
  int revert_patience = 1;
  bool reset_optimizer_on_plastic = false;

  /// Interventions can never fire.
  static SalConfig disabled() {
    SalConfig cfg;
    cfg.s_noise = std::numeric_limits<double>::infinity();
    cfg.s_yield = std::numeric_limits<double>::infinity();
    return cfg;
  }

  /// Throws ConfigError when an invariant is broken. Infinite thresholds are
  /// accepted and mean "never".
  void validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError("SalConfig: " + msg); };
    auto nonneg = [&](double v, const char* name) {
      if (!(v >= 0.0) || std::isnan(v)) fail(std::string(name) + " must be >= 0");
    };
    nonneg(rho, "rho");
    nonneg(theta, "theta");
    nonneg(eps_loss, "eps_loss");
    nonneg(eps_acc, "eps_acc");
    nonneg(delta, "delta");
    nonneg(lambda, "lambda");
    if (!(s_max > 0.0) || !std::isfinite(s_max)) fail("s_max must be finite and > 0");
    if (std::isnan(s_noise) || std::isnan(s_yield)) fail("thresholds must not be NaN");
    if (!(s_yield > 0.0)) fail("s_yield must be > 0");
    const bool both_off = std::isinf(s_noise) && std::isinf(s_yield);
    if (!both_off && !(s_noise < s_yield)) fail("s_noise must be < s_yield");
    if (std::isfinite(s_yield) && s_yield > s_max) fail("s_yield must be <= s_max");
    if (warmup_epochs < 0) fail("warmup_epochs must be >= 0");
    if (plastic_layer_count < 1) fail("plastic_layer_count must be >= 1");
    if (!(plastic_retain > 0.0 && plastic_retain <= 1.0)) fail("plastic_retain must be in (0,1]");
    if (!(plastic_noise_param >= 0.0)) fail("plastic_noise_param must be >= 0");
    if (!(revert_tolerance >= 0.0)) fail("revert_tolerance must be >= 0");
    if (revert_patience < 1) fail("revert_patience must be >= 1");
  }
};

/// Loss and accuracy of one finished epoch.
struct EpochMetrics {
  double loss = 0.0;
  double accuracy = 0.0;  // in [0, 1]
  int epoch = 0;          // 1-based; 0 is the "before training" sentinel

  /// Algorithm start state: loss +inf, accuracy 0.
  static EpochMetrics initial() {
    return {std::numeric_limits<double>::infinity(), 0.0, 0};
  }
};

/// Global stress scalar, kept in [0, s_max].
struct StressState {
  double s_g = 0.0;
  double s_max = 1.0;
  int last_update_epoch = 0;

  explicit StressState(double max = 1.0) : s_max(max) {}
};

enum class Regime { Warmup, Elastic, NoiseZone, PlasticZone };

inline std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Warmup: return "warmup";
    case Regime::Elastic: return "elastic";
    case Regime::NoiseZone: return "noise";
    case Regime::PlasticZone: return "plastic";
  }
  return "?";
}

/// True iff the epoch made progress on loss (and on accuracy, when the
/// accuracy condition is enabled). Both comparisons are strict.
///
/// The previous loss may be +inf (first epoch); the current one must be finite.
inline bool is_improvement(const EpochMetrics& curr, const EpochMetrics& prev,
                           const SalConfig& cfg) {
  if (!std::isfinite(curr.loss) || !std::isfinite(curr.accuracy)) {
    throw NumericError("is_improvement: non-finite metrics at epoch " +
                       std::to_string(curr.epoch));
  }
  if (std::isnan(prev.loss) || !std::isfinite(prev.accuracy)) {
    throw NumericError("is_improvement: invalid previous metrics at epoch " +
                       std::to_string(prev.epoch));
  }
  const bool loss_ok = prev.loss - curr.loss > cfg.eps_loss;
  if (!cfg.accuracy_condition_enabled) return loss_ok;
  return loss_ok && (curr.accuracy - prev.accuracy > cfg.eps_acc);
}

/// One step of the stress recurrence.
inline StressState update_stress(StressState state, bool improved, const SalConfig& cfg,
                                 int epoch = 0) {
  if (improved) {
    state.s_g = std::max(0.0, state.s_g - cfg.rho);
  } else {
    state.s_g = std::min(state.s_max, state.s_g + cfg.theta);
  }
  state.last_update_epoch = epoch;
  return state;
}

inline Regime classify_regime(const StressState& state, int epoch, const SalConfig& cfg) {
  if (epoch <= cfg.warmup_epochs) return Regime::Warmup;
  if (state.s_g >= cfg.s_yield) return Regime::PlasticZone;
  if (state.s_g > cfg.s_noise) return Regime::NoiseZone;
  return Regime::Elastic;
}

}  // namespace sal
