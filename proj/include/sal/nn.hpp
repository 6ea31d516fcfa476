#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sal/error.hpp"
#include "sal/parameter_set.hpp"
#include "sal/rng.hpp"

namespace sal::nn {

/// Row-major dense matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  Matrix(std::size_t r, std::size_t c, std::vector<double> values)
      : rows(r), cols(c), data(std::move(values)) {
    if (data.size() != r * c) throw ShapeError("matrix value count does not match shape");
  }

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {data.data() + i * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

enum class Activation { Relu, Tanh };
enum class OutputKind { Softmax, Identity };
enum class LossKind { CrossEntropy, Mse };

inline Activation activation_from_string(std::string_view s) {
  if (s == "relu") return Activation::Relu;
  if (s == "tanh") return Activation::Tanh;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}
inline OutputKind output_from_string(std::string_view s) {
  if (s == "softmax") return OutputKind::Softmax;
  if (s == "identity") return OutputKind::Identity;
  throw ConfigError("unknown output kind '" + std::string(s) + "'");
}
inline LossKind loss_from_string(std::string_view s) {
  if (s == "cross_entropy") return LossKind::CrossEntropy;
  if (s == "mse") return LossKind::Mse;
  throw ConfigError("unknown loss '" + std::string(s) + "'");
}

struct MlpSpec {
  std::vector<std::size_t> widths;     // input, hidden..., output
  std::vector<Activation> activations; // one per hidden layer; a single entry is broadcast
  OutputKind output = OutputKind::Softmax;
  std::uint64_t seed = 0;

  std::size_t layer_count() const { return widths.size() - 1; }

  Activation hidden_activation(std::size_t layer) const {
    if (activations.empty()) return Activation::Relu;
    return activations.size() == 1 ? activations.front() : activations.at(layer);
  }

  void validate() const {
    if (widths.size() < 2) throw ConfigError("MlpSpec: need at least 2 widths");
    if (std::any_of(widths.begin(), widths.end(), [](std::size_t w) { return w == 0; })) {
      throw ConfigError("MlpSpec: widths must be >= 1");
    }
    const std::size_t hidden = widths.size() - 2;
    if (activations.size() > 1 && activations.size() != hidden) {
      throw ConfigError("MlpSpec: activation count must be 1 or one per hidden layer");
    }
  }
};

inline std::string kernel_name(std::size_t layer) {
  return "dense" + std::to_string(layer) + ".kernel";
}
inline std::string bias_name(std::size_t layer) {
  return "dense" + std::to_string(layer) + ".bias";
}

/// Kernels ~ N(0, 1/fan_in), biases 0. Entry order: kernel0, bias0, kernel1, ...
inline ParameterSet init_mlp(const MlpSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  ParameterSet params;
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const std::size_t fan_in = spec.widths[l];
    const std::size_t fan_out = spec.widths[l + 1];
    Tensor kernel({fan_in, fan_out});
    const double stddev = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& w : kernel.values) w = stddev * rng.normal();
    params.add(kernel_name(l), std::move(kernel));
    params.add(bias_name(l), Tensor({fan_out}));
  }
  return params;
}

/// Per-layer inputs and pre-activations kept for backprop.
struct ForwardCache {
  std::vector<Matrix> inputs;          // inputs[l] feeds layer l
  std::vector<Matrix> pre_activations; // z of layer l
};

struct ForwardResult {
  Matrix predictions;
  ForwardCache cache;
};

namespace detail {

inline void check_layout(const ParameterSet& params, const MlpSpec& spec) {
  if (params.size() != 2 * spec.layer_count()) {
    throw ShapeError("MLP parameter set has " + std::to_string(params.size()) +
                     " entries, spec needs " + std::to_string(2 * spec.layer_count()));
  }
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const Shape kshape{spec.widths[l], spec.widths[l + 1]};
    const Shape bshape{spec.widths[l + 1]};
    if (params[2 * l].tensor.shape != kshape || params[2 * l + 1].tensor.shape != bshape) {
      throw ShapeError("MLP layer " + std::to_string(l) + " shape mismatch");
    }
  }
}

inline Matrix affine(const Matrix& x, const Tensor& kernel, const Tensor& bias) {
  const std::size_t in = kernel.shape[0];
  const std::size_t out = kernel.shape[1];
  Matrix z(x.rows, out);
  for (std::size_t i = 0; i < x.rows; ++i) {
    auto zr = z.row(i);
    std::copy(bias.values.begin(), bias.values.end(), zr.begin());
    const auto xr = x.row(i);
    for (std::size_t k = 0; k < in; ++k) {
      const double xv = xr[k];
      const double* wrow = kernel.values.data() + k * out;
      for (std::size_t j = 0; j < out; ++j) zr[j] += xv * wrow[j];
    }
  }
  return z;
}

inline double activate(Activation a, double z) {
  return a == Activation::Relu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

inline double activate_grad(Activation a, double z) {
  if (a == Activation::Relu) return z > 0.0 ? 1.0 : 0.0;
  const double t = std::tanh(z);
  return 1.0 - t * t;
}

inline void softmax_row(std::span<const double> z, std::span<double> out) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    out[j] = std::exp(z[j] - m);
    sum += out[j];
  }
  for (double& v : out) v /= sum;
}

inline double log_sum_exp(std::span<const double> z) {
  const double m = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double v : z) sum += std::exp(v - m);
  return m + std::log(sum);
}

}  // namespace detail

inline ForwardResult forward(const ParameterSet& params, const MlpSpec& spec, const Matrix& inputs) {
  detail::check_layout(params, spec);
  if (inputs.cols != spec.widths.front()) {
    throw ShapeError("forward: input width " + std::to_string(inputs.cols) + " != " +
                     std::to_string(spec.widths.front()));
  }
  ForwardResult res;
  Matrix a = inputs;
  const std::size_t layers = spec.layer_count();
  for (std::size_t l = 0; l < layers; ++l) {
    Matrix z = detail::affine(a, params[2 * l].tensor, params[2 * l + 1].tensor);
    res.cache.inputs.push_back(std::move(a));
    if (l + 1 < layers) {
      a = Matrix(z.rows, z.cols);
      const Activation act = spec.hidden_activation(l);
      for (std::size_t i = 0; i < z.data.size(); ++i) a.data[i] = detail::activate(act, z.data[i]);
    } else if (spec.output == OutputKind::Softmax) {
      a = Matrix(z.rows, z.cols);
      for (std::size_t i = 0; i < z.rows; ++i) detail::softmax_row(z.row(i), a.row(i));
    } else {
      a = z;
    }
    res.cache.pre_activations.push_back(std::move(z));
  }
  res.predictions = std::move(a);
  return res;
}

/// Labelled mini-batch. For MSE, `targets` is used when non-empty, otherwise
/// labels are one-hot encoded.
struct Batch {
  Matrix inputs;
  std::vector<int> labels;
  Matrix targets;

  std::size_t size() const { return inputs.rows; }
};

struct LossAndGrad {
  double loss = 0.0;
  ParameterSet grads;
  Matrix predictions;
};

namespace detail {

inline Matrix mse_targets(const Batch& batch, std::size_t classes) {
  if (batch.targets.rows != 0) {
    if (batch.targets.rows != batch.size() || batch.targets.cols != classes) {
      throw ShapeError("mse: target matrix shape mismatch");
    }
    return batch.targets;
  }
  Matrix t(batch.size(), classes);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const int y = batch.labels.at(i);
    if (y < 0 || static_cast<std::size_t>(y) >= classes) throw ShapeError("mse: label out of range");
    t(i, static_cast<std::size_t>(y)) = 1.0;
  }
  return t;
}

}  // namespace detail

/// Batch-mean loss and its gradient with respect to every parameter.
///
/// Cross-entropy is computed from the final pre-activations with a
/// log-sum-exp, so it never takes the log of a rounded probability. MSE is
/// the mean over all n*k output elements of the squared error.
inline LossAndGrad loss_and_grad(const ParameterSet& params, const MlpSpec& spec, const Batch& batch,
                                 LossKind kind) {
  const std::size_t n = batch.size();
  if (n == 0) throw ShapeError("loss_and_grad: empty batch");
  auto fwd = forward(params, spec, batch.inputs);
  const Matrix& logits = fwd.cache.pre_activations.back();
  const std::size_t k = logits.cols;
  const double inv_n = 1.0 / static_cast<double>(n);

  LossAndGrad out;
  Matrix dz(n, k);
  if (kind == LossKind::CrossEntropy) {
    if (batch.labels.size() != n) throw ShapeError("cross_entropy: label count mismatch");
    std::vector<double> p(k);
    for (std::size_t i = 0; i < n; ++i) {
      const int y = batch.labels[i];
      if (y < 0 || static_cast<std::size_t>(y) >= k) {
        throw ShapeError("cross_entropy: label " + std::to_string(y) + " out of range");
      }
      const auto zr = logits.row(i);
      out.loss += detail::log_sum_exp(zr) - zr[static_cast<std::size_t>(y)];
      detail::softmax_row(zr, p);
      for (std::size_t j = 0; j < k; ++j) dz(i, j) = p[j] * inv_n;
      dz(i, static_cast<std::size_t>(y)) -= inv_n;
    }
    out.loss *= inv_n;
  } else {
    const Matrix t = detail::mse_targets(batch, k);
    const Matrix& y = fwd.predictions;
    const double scale = 1.0 / static_cast<double>(n * k);
    std::vector<double> dy(k);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        const double r = y(i, j) - t(i, j);
        out.loss += r * r;
        dy[j] = 2.0 * r * scale;
      }
      if (spec.output == OutputKind::Softmax) {
        double dot = 0.0;
        for (std::size_t j = 0; j < k; ++j) dot += dy[j] * y(i, j);
        for (std::size_t j = 0; j < k; ++j) dz(i, j) = y(i, j) * (dy[j] - dot);
      } else {
        for (std::size_t j = 0; j < k; ++j) dz(i, j) = dy[j];
      }
    }
    out.loss *= scale;
  }
  if (!std::isfinite(out.loss)) throw NumericError("loss_and_grad: non-finite loss");

  out.grads = params.zeros_like();
  for (std::size_t l = spec.layer_count(); l-- > 0;) {
    const Matrix& a = fwd.cache.inputs[l];
    const Tensor& kernel = params[2 * l].tensor;
    const std::size_t in = kernel.shape[0];
    const std::size_t outw = kernel.shape[1];
    auto& gk = out.grads[2 * l].tensor.values;
    auto& gb = out.grads[2 * l + 1].tensor.values;
    for (std::size_t i = 0; i < n; ++i) {
      const auto dzr = dz.row(i);
      const auto ar = a.row(i);
      for (std::size_t p = 0; p < in; ++p) {
        const double av = ar[p];
        double* grow = gk.data() + p * outw;
        for (std::size_t j = 0; j < outw; ++j) grow[j] += av * dzr[j];
      }
      for (std::size_t j = 0; j < outw; ++j) gb[j] += dzr[j];
    }
    if (l == 0) break;
    Matrix da(n, in);
    const Matrix& zprev = fwd.cache.pre_activations[l - 1];
    const Activation act = spec.hidden_activation(l - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto dzr = dz.row(i);
      for (std::size_t p = 0; p < in; ++p) {
        const double* wrow = kernel.values.data() + p * outw;
        double s = 0.0;
        for (std::size_t j = 0; j < outw; ++j) s += wrow[j] * dzr[j];
        da(i, p) = s * detail::activate_grad(act, zprev(i, p));
      }
    }
    dz = std::move(da);
  }
  if (!out.grads.all_finite()) throw NumericError("loss_and_grad: non-finite gradient");
  out.predictions = std::move(fwd.predictions);
  return out;
}

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
inline double accuracy(const Matrix& predictions, std::span<const int> labels) {
  if (predictions.rows == 0) throw ShapeError("accuracy: empty batch");
  if (predictions.rows != labels.size()) throw ShapeError("accuracy: row/label count mismatch");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.rows; ++i) {
    const auto r = predictions.row(i);
    const auto best = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
    if (best == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(predictions.rows);
}

}  // namespace sal::nn
