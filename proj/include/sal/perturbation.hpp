#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sal/error.hpp"
#include "sal/parameter_set.hpp"
#include "sal/rng.hpp"
#include "sal/stress.hpp"

namespace sal {

enum class InterventionKind { Noise, Plastic, Revert };

inline std::string_view to_string(InterventionKind k) {
  switch (k) {
    case InterventionKind::Noise: return "noise";
    case InterventionKind::Plastic: return "plastic";
    case InterventionKind::Revert: return "revert";
  }
  return "?";
}

inline InterventionKind intervention_kind_from_string(std::string_view s) {
  if (s == "noise") return InterventionKind::Noise;
  if (s == "plastic") return InterventionKind::Plastic;
  if (s == "revert") return InterventionKind::Revert;
  throw IoError("unknown intervention kind '" + std::string(s) + "'");
}

struct InterventionEvent {
  int epoch = 0;
  InterventionKind kind = InterventionKind::Noise;
  double sigma = 0.0;
  std::vector<std::string> layers;
  double stress_before = 0.0;
  double stress_after = 0.0;

  friend bool operator==(const InterventionEvent&, const InterventionEvent&) = default;
};

/// Weights saved at the moment a plastic event fires.
struct YieldSnapshot {
  ParameterSet params;
  double pre_event_loss = 0.0;
  double pre_event_accuracy = 0.0;
  int event_epoch = 0;
};

/// Noise standard deviation alpha * (delta + lambda * s_g) with
/// alpha = min(1, s_g / s_yield).
inline double noise_scale(double s_g, const SalConfig& cfg) {
  if (!(cfg.s_yield > 0.0)) throw ConfigError("noise_scale: s_yield must be > 0");
  if (!(s_g >= 0.0)) throw ConfigError("noise_scale: stress must be >= 0");
  const double alpha = std::min(1.0, s_g / cfg.s_yield);
  return alpha * (cfg.delta + cfg.lambda * s_g);
}

/// Adds sigma * N(0,1) to every trainable element, drawing in entry order.
/// Returns the names of the entries touched.
inline std::vector<std::string> inject_noise(ParameterSet& params, double sigma, Rng& rng) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw NumericError("inject_noise: sigma must be finite and >= 0");
  }
  std::vector<std::string> touched;
  for (auto& entry : params) {
    if (!entry.trainable) continue;
    for (double& w : entry.tensor.values) {
      w += sigma * rng.normal();
      if (!std::isfinite(w)) {
        throw NumericError("inject_noise: non-finite weight in '" + entry.name +
                           "' (sigma=" + std::to_string(sigma) + ")");
      }
    }
    touched.push_back(entry.name);
  }
  return touched;
}

/// Standard deviation of the plastic noise term.
inline double plastic_noise_std(const SalConfig& cfg) {
  return cfg.plastic_noise_is_std ? cfg.plastic_noise_param
                                  : std::sqrt(cfg.plastic_noise_param);
}

struct PlasticOutcome {
  YieldSnapshot snapshot;
  std::vector<std::string> layers;
  bool fewer_layers_than_requested = false;
};

/// Snapshots the weights, then rewrites the last `plastic_layer_count`
/// trainable entries as w <- retain * w + N(0, std^2). Other entries are
/// left untouched. With fewer trainable entries than requested, all of them
/// are deformed and `fewer_layers_than_requested` is set.
inline PlasticOutcome plastic_deform(ParameterSet& params, const SalConfig& cfg, Rng& rng,
                                     const EpochMetrics& pre_event = {}) {
  PlasticOutcome out;
  out.snapshot = {params, pre_event.loss, pre_event.accuracy, pre_event.epoch};

  std::vector<std::size_t> trainable;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].trainable) trainable.push_back(i);
  }
  const auto wanted = static_cast<std::size_t>(cfg.plastic_layer_count);
  out.fewer_layers_than_requested = trainable.size() < wanted;
  const std::size_t first = trainable.size() > wanted ? trainable.size() - wanted : 0;

  const double stddev = plastic_noise_std(cfg);
  for (std::size_t k = first; k < trainable.size(); ++k) {
    auto& entry = params[trainable[k]];
    for (double& w : entry.tensor.values) {
      w = cfg.plastic_retain * w + stddev * rng.normal();
      if (!std::isfinite(w)) {
        throw NumericError("plastic_deform: non-finite weight in '" + entry.name + "'");
      }
    }
    out.layers.push_back(entry.name);
  }
  return out;
}

/// Failure-recovery test, evaluated once `revert_patience` epochs have
/// passed since the plastic event.
inline bool should_revert(const EpochMetrics& post, const YieldSnapshot& snapshot,
                          const SalConfig& cfg) {
  if (post.epoch - snapshot.event_epoch < cfg.revert_patience) return false;
  const double limit =
      snapshot.pre_event_loss + cfg.revert_tolerance * std::abs(snapshot.pre_event_loss);
  return post.loss > limit;
}

/// Restores the snapshot weights and returns the Revert event.
inline InterventionEvent revert_to_yield(ParameterSet& params,
                                         const std::optional<YieldSnapshot>& snapshot,
                                         int epoch = 0, double stress = 0.0) {
  if (!snapshot) throw Error("revert_to_yield: no yield snapshot recorded");
  if (!params.same_layout(snapshot->params)) {
    throw ShapeError("revert_to_yield: snapshot layout differs from live parameters");
  }
  params = snapshot->params;
  InterventionEvent ev;
  ev.epoch = epoch;
  ev.kind = InterventionKind::Revert;
  for (const auto& e : params) {
    if (e.trainable) ev.layers.push_back(e.name);
  }
  ev.stress_before = stress;
  ev.stress_after = stress;
  return ev;
}

}  // namespace sal
