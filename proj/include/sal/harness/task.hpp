#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sal/data.hpp"
#include "sal/error.hpp"
#include "sal/harness/config.hpp"
#include "sal/landscape.hpp"
#include "sal/nn.hpp"
#include "sal/parameter_set.hpp"
#include "sal/rng.hpp"
#include "sal/stress.hpp"

namespace sal {

using StepFn = std::function<void(ParameterSet&, const ParameterSet&)>;

/// A trainable problem: how to initialise weights, run one epoch of
/// mini-batch steps, and evaluate loss and gradient on the full data.
class Task {
 public:
  virtual ~Task() = default;

  virtual ParameterSet initial_parameters(std::uint64_t master_seed) const = 0;

  /// Runs the epoch's optimizer steps. Returns the mean batch loss and the
  /// running accuracy, both measured before each step.
  virtual EpochMetrics train_epoch(ParameterSet& params, const StepFn& step, Rng& data_rng,
                                   int epoch) const = 0;

  virtual EpochMetrics evaluate(const ParameterSet& params) const = 0;
  virtual std::optional<EpochMetrics> evaluate_validation(const ParameterSet&) const {
    return std::nullopt;
  }

  virtual double full_loss(const ParameterSet& params) const = 0;
  virtual ParameterSet full_gradient(const ParameterSet& params) const = 0;

  /// Basin label for landscape fixtures, empty otherwise.
  virtual std::string basin(const ParameterSet&) const { return {}; }

  /// Flat-vector adapters for the analysis routines.
  std::function<double(std::span<const double>)> loss_fn(const ParameterSet& layout) const {
    return [this, p = ParameterSet(layout)](std::span<const double> w) mutable {
      p.assign_flat(w);
      return full_loss(p);
    };
  }
  std::function<std::vector<double>(std::span<const double>)> grad_fn(
      const ParameterSet& layout) const {
    return [this, p = ParameterSet(layout)](std::span<const double> w) mutable {
      p.assign_flat(w);
      return full_gradient(p).flatten();
    };
  }
};

/// Analytic landscape; one gradient evaluation per epoch.
class LandscapeTask final : public Task {
 public:
  LandscapeTask(LandscapeSpec spec, std::vector<double> start, double jitter,
                std::optional<DoubleWell> fixture = std::nullopt)
      : spec_(std::move(spec)), start_(std::move(start)), jitter_(jitter), fixture_(std::move(fixture)) {
    if (start_.size() != spec_.dim) throw ConfigError("landscape start point has wrong dimension");
  }

  const LandscapeSpec& spec() const noexcept { return spec_; }
  const std::optional<DoubleWell>& fixture() const noexcept { return fixture_; }

  ParameterSet initial_parameters(std::uint64_t master_seed) const override {
    std::vector<double> w = start_;
    if (jitter_ > 0.0) {
      Rng rng = Rng::substream(master_seed, "init");
      for (double& x : w) x += jitter_ * rng.normal();
    }
    ParameterSet p;
    p.add("w", Tensor({spec_.dim}, std::move(w)));
    return p;
  }

  EpochMetrics train_epoch(ParameterSet& params, const StepFn& step, Rng&, int epoch) const override {
    const auto v = landscape_eval(spec_, params[0].tensor.values);
    ParameterSet grads = params.zeros_like();
    grads[0].tensor.values = v.gradient;
    step(params, grads);
    return {v.loss, 0.0, epoch};
  }

  EpochMetrics evaluate(const ParameterSet& params) const override {
    return {full_loss(params), 0.0, 0};
  }

  double full_loss(const ParameterSet& params) const override {
    return landscape_eval(spec_, params[0].tensor.values).loss;
  }

  ParameterSet full_gradient(const ParameterSet& params) const override {
    ParameterSet g = params.zeros_like();
    g[0].tensor.values = landscape_eval(spec_, params[0].tensor.values).gradient;
    return g;
  }

  std::string basin(const ParameterSet& params) const override {
    return fixture_ ? fixture_->basin_of(params[0].tensor.values) : std::string{};
  }

 private:
  LandscapeSpec spec_;
  std::vector<double> start_;
  double jitter_ = 0.0;
  std::optional<DoubleWell> fixture_;
};

/// MLP classifier on an in-memory dataset.
class MlpTask final : public Task {
 public:
  MlpTask(Dataset train, std::optional<Dataset> validation, nn::MlpSpec spec, nn::LossKind loss,
          int batch_size)
      : train_(std::move(train)),
        validation_(std::move(validation)),
        spec_(std::move(spec)),
        loss_(loss),
        batch_size_(static_cast<std::size_t>(batch_size)) {
    spec_.validate();
    if (train_.dim() != spec_.widths.front()) {
      throw ConfigError("dataset has " + std::to_string(train_.dim()) +
                        " features but the model expects " + std::to_string(spec_.widths.front()));
    }
    if (static_cast<std::size_t>(train_.class_count) > spec_.widths.back()) {
      throw ConfigError("dataset has more classes than model outputs");
    }
  }

  const Dataset& train_set() const noexcept { return train_; }
  const nn::MlpSpec& model() const noexcept { return spec_; }

  ParameterSet initial_parameters(std::uint64_t master_seed) const override {
    nn::MlpSpec s = spec_;
    s.seed = substream_seed(master_seed, "init");
    return nn::init_mlp(s);
  }

  EpochMetrics train_epoch(ParameterSet& params, const StepFn& step, Rng& data_rng,
                           int epoch) const override {
    std::vector<std::size_t> order(train_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    data_rng.shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    std::size_t batches = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += batch_size_) {
      const std::size_t stop = std::min(order.size(), start + batch_size_);
      const auto batch = train_.batch(std::span(order).subspan(start, stop - start));
      auto lg = nn::loss_and_grad(params, spec_, batch, loss_);
      loss_sum += lg.loss;
      ++batches;
      correct += static_cast<std::size_t>(
          std::llround(nn::accuracy(lg.predictions, batch.labels) * static_cast<double>(batch.size())));
      step(params, lg.grads);
    }
    return {loss_sum / static_cast<double>(batches),
            static_cast<double>(correct) / static_cast<double>(order.size()), epoch};
  }

  EpochMetrics evaluate(const ParameterSet& params) const override { return evaluate_on(train_, params); }

  std::optional<EpochMetrics> evaluate_validation(const ParameterSet& params) const override {
    if (!validation_) return std::nullopt;
    return evaluate_on(*validation_, params);
  }

  double full_loss(const ParameterSet& params) const override {
    return nn::loss_and_grad(params, spec_, train_.all(), loss_).loss;
  }

  ParameterSet full_gradient(const ParameterSet& params) const override {
    return nn::loss_and_grad(params, spec_, train_.all(), loss_).grads;
  }

 private:
  EpochMetrics evaluate_on(const Dataset& ds, const ParameterSet& params) const {
    auto lg = nn::loss_and_grad(params, spec_, ds.all(), loss_);
    return {lg.loss, nn::accuracy(lg.predictions, ds.labels), 0};
  }

  Dataset train_;
  std::optional<Dataset> validation_;
  nn::MlpSpec spec_;
  nn::LossKind loss_;
  std::size_t batch_size_;
};

/// Constant loss, zero accuracy, zero gradient: training never improves, so
/// the stress schedule is fully determined by the recurrence.
class FrozenTask final : public Task {
 public:
  FrozenTask(double loss, int entries) : loss_(loss), entries_(entries) {
    if (entries < 1) throw ConfigError("frozen task needs at least one parameter entry");
  }

  ParameterSet initial_parameters(std::uint64_t) const override {
    ParameterSet p;
    for (int i = 0; i < entries_; ++i) p.add("frozen" + std::to_string(i), Tensor({2}));
    return p;
  }

  EpochMetrics train_epoch(ParameterSet& params, const StepFn& step, Rng&, int epoch) const override {
    step(params, params.zeros_like());
    return {loss_, 0.0, epoch};
  }

  EpochMetrics evaluate(const ParameterSet&) const override { return {loss_, 0.0, 0}; }
  double full_loss(const ParameterSet&) const override { return loss_; }
  ParameterSet full_gradient(const ParameterSet& params) const override { return params.zeros_like(); }

 private:
  double loss_;
  int entries_;
};

namespace detail {

inline std::pair<Dataset, std::optional<Dataset>> split_validation(Dataset ds, double fraction,
                                                                   std::uint64_t master_seed) {
  if (!(fraction > 0.0)) return {std::move(ds), std::nullopt};
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = Rng::substream(master_seed, "split");
  rng.shuffle(order.begin(), order.end());
  const auto n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.size())));
  if (n_val == 0 || n_val >= ds.size()) throw ConfigError("validation split leaves an empty set");
  const std::span<const std::size_t> all(order);
  auto to_dataset = [&](std::span<const std::size_t> idx) {
    auto b = ds.batch(idx);
    return Dataset{std::move(b.inputs), std::move(b.labels), ds.class_count};
  };
  Dataset val = to_dataset(all.subspan(0, n_val));
  Dataset train = to_dataset(all.subspan(n_val));
  return {std::move(train), std::move(val)};
}

}  // namespace detail

/// Builds the task a config describes.
inline std::unique_ptr<Task> make_task(const RunConfig& cfg) {
  const auto& t = cfg.task;
  switch (t.kind) {
    case TaskKind::Landscape: {
      if (t.landscape == "quadratic") {
        auto spec = LandscapeSpec::quadratic(t.curvature);
        std::vector<double> start = t.init.empty() ? std::vector<double>(spec.dim, 1.0) : t.init;
        return std::make_unique<LandscapeTask>(std::move(spec), std::move(start), t.init_jitter);
      }
      auto dw = make_double_well(t.sharp_width, t.flat_width, t.separation, t.sharp_depth,
                                 t.flat_depth, static_cast<std::size_t>(t.dim));
      std::vector<double> start = t.init;
      if (start.empty()) {
        if (t.init_basin == "sharp") start = dw.sharp_center;
        else if (t.init_basin == "flat") start = dw.flat_center;
        else throw ConfigError("task.init_basin must be 'sharp' or 'flat'");
      }
      auto spec = dw.spec;
      return std::make_unique<LandscapeTask>(std::move(spec), std::move(start), t.init_jitter,
                                             std::move(dw));
    }
    case TaskKind::TwoMoons:
    case TaskKind::Csv: {
      Dataset ds = t.kind == TaskKind::TwoMoons
                       ? gen_two_moons(static_cast<std::size_t>(t.n), t.noise,
                                       substream_seed(cfg.seed, "data_gen"))
                       : load_csv_dataset(t.path, t.label_column, t.standardize);
      auto [train, val] = detail::split_validation(std::move(ds), t.validation_fraction, cfg.seed);
      nn::MlpSpec spec;
      spec.widths = cfg.model.widths;
      spec.activations = {nn::activation_from_string(cfg.model.activation)};
      spec.output = nn::output_from_string(cfg.model.output);
      return std::make_unique<MlpTask>(std::move(train), std::move(val), std::move(spec),
                                       nn::loss_from_string(cfg.model.loss), cfg.batch_size);
    }
    case TaskKind::Frozen:
      return std::make_unique<FrozenTask>(t.frozen_loss, t.frozen_entries);
  }
  throw ConfigError("unsupported task");
}

}  // namespace sal
