#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sal/optimizers.hpp"
#include "sal/parameter_set.hpp"
#include "sal/perturbation.hpp"
#include "sal/rng.hpp"
#include "sal/stress.hpp"

namespace sal {

/// What happened at one epoch boundary.
struct EpochOutcome {
  bool improved = false;
  double stress = 0.0;  // after any plastic reset
  Regime regime = Regime::Warmup;
  std::vector<InterventionEvent> events;
  std::vector<std::string> warnings;

  bool has(InterventionKind kind) const {
    for (const auto& e : events) {
      if (e.kind == kind) return true;
    }
    return false;
  }
};

/// Epoch-boundary logic of stress-aware learning.
///
/// Per epoch, in order: stress update from the improvement test, the
/// pending failure-recovery check, noise injection when s_g > s_noise, then
/// plastic deformation and stress reset when s_g >= s_yield. Stress keeps
/// accumulating during warm-up; only the interventions are suppressed.
class StressController {
 public:
  StressController(SalConfig cfg, Rng noise_rng, Rng plastic_rng)
      : cfg_(std::move(cfg)),
        state_(cfg_.s_max),
        prev_(EpochMetrics::initial()),
        noise_rng_(std::move(noise_rng)),
        plastic_rng_(std::move(plastic_rng)) {
    cfg_.validate();
  }

  /// Streams derived from a master seed ("noise", "plastic").
  StressController(SalConfig cfg, std::uint64_t master_seed)
      : StressController(std::move(cfg), Rng::substream(master_seed, "noise"),
                         Rng::substream(master_seed, "plastic")) {}

  const SalConfig& config() const noexcept { return cfg_; }
  const StressState& state() const noexcept { return state_; }
  const EpochMetrics& previous_metrics() const noexcept { return prev_; }
  const std::optional<YieldSnapshot>& snapshot() const noexcept { return snapshot_; }
  bool revert_pending() const noexcept { return revert_pending_; }

  EpochOutcome end_epoch(ParameterSet& params, const EpochMetrics& metrics) {
    EpochOutcome out;
    const int epoch = metrics.epoch;
    out.improved = is_improvement(metrics, prev_, cfg_);
    state_ = update_stress(state_, out.improved, cfg_, epoch);
    out.regime = classify_regime(state_, epoch, cfg_);

    EpochMetrics history = metrics;
    if (out.regime != Regime::Warmup) {
      if (revert_pending_ && epoch - snapshot_->event_epoch >= cfg_.revert_patience) {
        revert_pending_ = false;
        if (should_revert(metrics, *snapshot_, cfg_)) {
          out.events.push_back(revert_to_yield(params, snapshot_, epoch, state_.s_g));
          history.loss = snapshot_->pre_event_loss;
          history.accuracy = snapshot_->pre_event_accuracy;
        }
      }
      if (state_.s_g > cfg_.s_noise) {
        const double sigma = noise_scale(state_.s_g, cfg_);
        InterventionEvent ev;
        ev.epoch = epoch;
        ev.kind = InterventionKind::Noise;
        ev.sigma = sigma;
        ev.layers = inject_noise(params, sigma, noise_rng_);
        ev.stress_before = state_.s_g;
        ev.stress_after = state_.s_g;
        out.events.push_back(std::move(ev));
      }
      if (state_.s_g >= cfg_.s_yield) {
        auto plastic = plastic_deform(params, cfg_, plastic_rng_, metrics);
        if (plastic.fewer_layers_than_requested) {
          out.warnings.push_back("plastic deformation requested " +
                                 std::to_string(cfg_.plastic_layer_count) +
                                 " layers but only " + std::to_string(plastic.layers.size()) +
                                 " are trainable; deforming all of them");
        }
        InterventionEvent ev;
        ev.epoch = epoch;
        ev.kind = InterventionKind::Plastic;
        ev.sigma = plastic_noise_std(cfg_);
        ev.layers = std::move(plastic.layers);
        ev.stress_before = state_.s_g;
        state_.s_g = 0.0;
        ev.stress_after = state_.s_g;
        out.events.push_back(std::move(ev));
        snapshot_ = std::move(plastic.snapshot);
        revert_pending_ = true;
      }
    }
    out.stress = state_.s_g;
    prev_ = history;
    return out;
  }

 private:
  SalConfig cfg_;
  StressState state_;
  EpochMetrics prev_;
  Rng noise_rng_;
  Rng plastic_rng_;
  std::optional<YieldSnapshot> snapshot_;
  bool revert_pending_ = false;
};

/// Base optimizer plus epoch-boundary stress control.
///
/// step() forwards to the wrapped optimizer untouched; SAL acts only in
/// end_epoch(). With interventions disabled the parameter trajectory is the
/// bare optimizer's, bit for bit.
template <GradientOptimizer Opt>
class SalOptimizer {
 public:
  SalOptimizer(Opt optimizer, StressController controller)
      : optimizer_(std::move(optimizer)), controller_(std::move(controller)) {}

  void step(ParameterSet& params, const ParameterSet& grads) { optimizer_.step(params, grads); }

  EpochOutcome end_epoch(ParameterSet& params, const EpochMetrics& metrics) {
    auto out = controller_.end_epoch(params, metrics);
    if (controller_.config().reset_optimizer_on_plastic &&
        (out.has(InterventionKind::Plastic) || out.has(InterventionKind::Revert))) {
      optimizer_.reset_state();
    }
    return out;
  }

  Opt& optimizer() noexcept { return optimizer_; }
  const Opt& optimizer() const noexcept { return optimizer_; }
  const StressController& controller() const noexcept { return controller_; }

 private:
  Opt optimizer_;
  StressController controller_;
};

template <GradientOptimizer Opt>
SalOptimizer<Opt> wrap_with_sal(Opt optimizer, SalConfig cfg, std::uint64_t master_seed) {
  return SalOptimizer<Opt>(std::move(optimizer), StressController(std::move(cfg), master_seed));
}

}  // namespace sal
