#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>

#include "sal/error.hpp"
#include "sal/parameter_set.hpp"

namespace sal {

enum class OptimizerKind { Sgd, Adam, Adamax, Nadam, RmsProp };

inline std::string_view to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Sgd: return "sgd";
    case OptimizerKind::Adam: return "adam";
    case OptimizerKind::Adamax: return "adamax";
    case OptimizerKind::Nadam: return "nadam";
    case OptimizerKind::RmsProp: return "rmsprop";
  }
  return "?";
}

inline OptimizerKind optimizer_kind_from_string(std::string_view s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "adam") return OptimizerKind::Adam;
  if (s == "adamax") return OptimizerKind::Adamax;
  if (s == "nadam") return OptimizerKind::Nadam;
  if (s == "rmsprop") return OptimizerKind::RmsProp;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double momentum = 0.0;  // SGD
  double rho = 0.9;       // RMSProp decay

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw ConfigError("optimizer: learning rate must be > 0");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
      throw ConfigError("optimizer: betas must be in [0,1)");
    }
    if (!(epsilon >= 0.0)) throw ConfigError("optimizer: epsilon must be >= 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("optimizer: momentum must be in [0,1)");
    if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("optimizer: rho must be in [0,1)");
  }
};

/// Anything that can apply one gradient step in place.
template <class T>
concept GradientOptimizer = requires(T opt, ParameterSet& p, const ParameterSet& g) {
  opt.step(p, g);
  opt.reset_state();
};

/// First-order optimizer with per-parameter moment buffers.
///
/// SGD:     v = mu v + g;                        w -= lr v
/// Adam:    m = b1 m + (1-b1) g; v = b2 v + (1-b2) g^2
///          w -= lr mhat / (sqrt(vhat) + eps)
/// Adamax:  u = max(b2 u, |g|);                 w -= lr/(1-b1^t) m / (u + eps)
/// Nadam:   mbar = b1 m/(1-b1^(t+1)) + (1-b1) g/(1-b1^t)
///          w -= lr mbar / (sqrt(vhat) + eps)
/// RMSProp: v = rho v + (1-rho) g^2;             w -= lr g / (sqrt(v) + eps)
///
/// Non-trainable entries are skipped.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

  const OptimizerConfig& config() const noexcept { return cfg_; }
  std::int64_t steps() const noexcept { return t_; }

  void reset_state() {
    m_ = ParameterSet{};
    v_ = ParameterSet{};
    t_ = 0;
  }

  const ParameterSet& first_moment() const noexcept { return m_; }
  const ParameterSet& second_moment() const noexcept { return v_; }

  void step(ParameterSet& params, const ParameterSet& grads) {
    params.require_same_layout(grads, "optimizer step");
    if (!grads.all_finite()) throw NumericError("optimizer step: non-finite gradient");
    if (!m_.same_layout(params)) {
      m_ = params.zeros_like();
      v_ = params.zeros_like();
    }
    ++t_;
    const double t = static_cast<double>(t_);
    const double lr = cfg_.learning_rate;
    const double b1 = cfg_.beta1;
    const double b2 = cfg_.beta2;
    const double eps = cfg_.epsilon;
    const double bc1 = 1.0 - std::pow(b1, t);
    const double bc1_next = 1.0 - std::pow(b1, t + 1.0);
    const double bc2 = 1.0 - std::pow(b2, t);

    for (std::size_t e = 0; e < params.size(); ++e) {
      if (!params[e].trainable) continue;
      auto& w = params[e].tensor.values;
      const auto& g = grads[e].tensor.values;
      auto& m = m_[e].tensor.values;
      auto& v = v_[e].tensor.values;
      for (std::size_t i = 0; i < w.size(); ++i) {
        const double gi = g[i];
        switch (cfg_.kind) {
          case OptimizerKind::Sgd:
            m[i] = cfg_.momentum * m[i] + gi;
            w[i] -= lr * m[i];
            break;
          case OptimizerKind::Adam:
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            w[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
            break;
          case OptimizerKind::Adamax:
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = std::max(b2 * v[i], std::abs(gi));
            w[i] -= (lr / bc1) * m[i] / (v[i] + eps);
            break;
          case OptimizerKind::Nadam: {
            m[i] = b1 * m[i] + (1.0 - b1) * gi;
            v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
            const double mbar = b1 * m[i] / bc1_next + (1.0 - b1) * gi / bc1;
            w[i] -= lr * mbar / (std::sqrt(v[i] / bc2) + eps);
            break;
          }
          case OptimizerKind::RmsProp:
            v[i] = cfg_.rho * v[i] + (1.0 - cfg_.rho) * gi * gi;
            w[i] -= lr * gi / (std::sqrt(v[i]) + eps);
            break;
        }
      }
    }
  }

 private:
  OptimizerConfig cfg_;
  ParameterSet m_;
  ParameterSet v_;
  std::int64_t t_ = 0;
};

static_assert(GradientOptimizer<Optimizer>);

}  // namespace sal
