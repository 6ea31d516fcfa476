#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "sal/error.hpp"
#include "sal/parameter_set.hpp"
#include "sal/rng.hpp"

namespace sal::analysis {

using Vector = std::vector<double>;
using LossFn = std::function<double(std::span<const double>)>;
using GradFn = std::function<Vector(std::span<const double>)>;
using HvpFn = std::function<Vector(std::span<const double>)>;

/// Sharpness proxy: Euclidean norm of the flattened gradient.
inline double grad_norm_sharpness(std::span<const double> grad) {
  for (double g : grad) {
    if (!std::isfinite(g)) throw NumericError("grad_norm_sharpness: non-finite gradient");
  }
  return l2_norm(grad);
}

inline double grad_norm_sharpness(const ParameterSet& grads) {
  const auto flat = grads.flatten();
  return grad_norm_sharpness(flat);
}

/// Hessian-vector product by central differences of the gradient:
/// H v ~ (g(w + h v) - g(w - h v)) / 2h.
inline Vector fd_hvp(const GradFn& grad, std::span<const double> w, std::span<const double> v,
                     double step = 1e-4) {
  Vector plus(w.begin(), w.end());
  Vector minus(w.begin(), w.end());
  for (std::size_t i = 0; i < w.size(); ++i) {
    plus[i] += step * v[i];
    minus[i] -= step * v[i];
  }
  const Vector gp = grad(plus);
  const Vector gm = grad(minus);
  Vector out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) out[i] = (gp[i] - gm[i]) / (2.0 * step);
  return out;
}

/// HVP closure at a fixed point `w`.
inline HvpFn make_fd_hvp(GradFn grad, Vector w, double step = 1e-4) {
  return [grad = std::move(grad), w = std::move(w), step](std::span<const double> v) {
    return fd_hvp(grad, w, v, step);
  };
}

struct TraceEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  int probes = 0;
};

/// Hutchinson estimator: mean of z^T H z over Rademacher probes z.
inline TraceEstimate hutchinson_trace(const HvpFn& hvp, std::size_t dim, int n_probes, Rng& rng) {
  if (n_probes < 1) throw ConfigError("hutchinson_trace: need at least one probe");
  Vector z(dim);
  double mean = 0.0;
  double m2 = 0.0;
  for (int p = 0; p < n_probes; ++p) {
    for (double& zi : z) zi = rng.rademacher();
    const Vector hz = hvp(z);
    if (hz.size() != dim) throw ShapeError("hutchinson_trace: HVP returned wrong dimension");
    double q = 0.0;
    for (std::size_t i = 0; i < dim; ++i) q += z[i] * hz[i];
    if (!std::isfinite(q)) throw NumericError("hutchinson_trace: non-finite Hessian-vector product");
    const double delta = q - mean;
    mean += delta / static_cast<double>(p + 1);
    m2 += delta * (q - mean);
  }
  TraceEstimate out;
  out.estimate = mean;
  out.probes = n_probes;
  if (n_probes > 1) {
    out.std_error = std::sqrt(m2 / static_cast<double>(n_probes - 1) / n_probes);
  }
  return out;
}

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Monte Carlo E[L(w + sigma z)], z ~ N(0, I), summed in a fixed order so
/// the result is bitwise reproducible for a given generator state.
inline MonteCarloEstimate expected_loss_under_noise(const LossFn& loss, std::span<const double> w,
                                                    double sigma, std::size_t n_samples, Rng& rng) {
  if (!(sigma >= 0.0)) throw ConfigError("expected_loss_under_noise: sigma must be >= 0");
  if (n_samples < 1) throw ConfigError("expected_loss_under_noise: need at least one sample");
  MonteCarloEstimate out;
  out.samples = n_samples;
  if (sigma == 0.0) {
    out.mean = loss(w);
    return out;
  }
  Vector x(w.size());
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (std::size_t i = 0; i < w.size(); ++i) x[i] = w[i] + sigma * rng.normal();
    const double v = loss(x);
    const double delta = v - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (v - mean);
  }
  out.mean = mean;
  if (n_samples > 1) {
    out.std_error =
        std::sqrt(m2 / static_cast<double>(n_samples - 1) / static_cast<double>(n_samples));
  }
  return out;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Two-direction loss surface around a centre point.
struct SurfaceGrid {
  Vector center;
  Vector dir1;
  Vector dir2;
  double range = 0.0;
  Vector coords;               // shared axis values, coords[i] in [-range, range]
  std::vector<Vector> values;  // values[i][j] = loss(center + coords[i] dir1 + coords[j] dir2)
};

/// Random orthonormal pair (modified Gram-Schmidt, two passes).
inline std::pair<Vector, Vector> random_orthonormal_pair(std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw ConfigError("surface directions need dimension >= 2");
  Rng rng(seed);
  Vector d1(dim), d2(dim);
  for (double& v : d1) v = rng.normal();
  for (double& v : d2) v = rng.normal();
  const double n1 = l2_norm(d1);
  for (double& v : d1) v /= n1;
  for (int pass = 0; pass < 2; ++pass) {
    const double p = dot(d1, d2);
    for (std::size_t i = 0; i < dim; ++i) d2[i] -= p * d1[i];
  }
  const double n2 = l2_norm(d2);
  for (double& v : d2) v /= n2;
  return {std::move(d1), std::move(d2)};
}

inline SurfaceGrid surface_grid(const LossFn& loss, std::span<const double> center,
                                std::uint64_t seed, double range, int steps) {
  if (steps < 3 || steps % 2 == 0) throw ConfigError("surface_grid: steps must be odd and >= 3");
  if (!(range > 0.0)) throw ConfigError("surface_grid: range must be > 0");
  SurfaceGrid g;
  g.center.assign(center.begin(), center.end());
  std::tie(g.dir1, g.dir2) = random_orthonormal_pair(center.size(), seed);
  g.range = range;
  const int half = (steps - 1) / 2;
  g.coords.resize(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    g.coords[static_cast<std::size_t>(i)] =
        range * static_cast<double>(i - half) / static_cast<double>(half);
  }
  Vector x(center.size());
  g.values.assign(g.coords.size(), Vector(g.coords.size()));
  for (std::size_t i = 0; i < g.coords.size(); ++i) {
    for (std::size_t j = 0; j < g.coords.size(); ++j) {
      for (std::size_t k = 0; k < x.size(); ++k) {
        x[k] = center[k] + g.coords[i] * g.dir1[k] + g.coords[j] * g.dir2[k];
      }
      g.values[i][j] = loss(x);
    }
  }
  return g;
}

struct PcaResult {
  std::vector<Vector> components;       // unit-norm principal directions
  Vector eigenvalues;                   // sample covariance eigenvalues
  Vector explained_variance_ratio;
  std::vector<Vector> projections;      // n rows, one column per component
  bool rank_deficient = false;          // fewer than k components found
};

/// Centres the snapshots and extracts the top-k principal directions by
/// power iteration with deflation on the implicit sample covariance.
inline PcaResult pca_project(const std::vector<Vector>& snapshots, std::size_t k = 3,
                             double tol = 1e-14, int max_iter = 200000) {
  const std::size_t n = snapshots.size();
  if (n < k + 1) {
    throw ConfigError("pca_project: need at least " + std::to_string(k + 1) + " snapshots");
  }
  const std::size_t dim = snapshots.front().size();
  for (const auto& s : snapshots) {
    if (s.size() != dim) throw ShapeError("pca_project: snapshots differ in dimension");
  }
  Vector mean(dim, 0.0);
  for (const auto& s : snapshots) {
    for (std::size_t i = 0; i < dim; ++i) mean[i] += s[i];
  }
  for (double& m : mean) m /= static_cast<double>(n);
  std::vector<Vector> x(n, Vector(dim));
  double total_var = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < dim; ++i) {
      x[r][i] = snapshots[r][i] - mean[i];
      total_var += x[r][i] * x[r][i];
    }
  }
  const double denom = static_cast<double>(n - 1);
  total_var /= denom;

  auto cov_times = [&](const Vector& v) {
    Vector out(dim, 0.0);
    for (const auto& row : x) {
      const double p = dot(row, v);
      for (std::size_t i = 0; i < dim; ++i) out[i] += p * row[i];
    }
    for (double& o : out) o /= denom;
    return out;
  };

  PcaResult res;
  Rng rng(0x5eed);
  for (std::size_t c = 0; c < std::min(k, dim); ++c) {
    Vector v(dim);
    for (double& e : v) e = rng.normal();
    auto orthonormalize = [&](Vector& u) {
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& prev : res.components) {
          const double p = dot(prev, u);
          for (std::size_t i = 0; i < dim; ++i) u[i] -= p * prev[i];
        }
      }
      const double nu = l2_norm(u);
      if (nu > 0.0) {
        for (double& e : u) e /= nu;
      }
      return nu;
    };
    orthonormalize(v);
    double lambda = 0.0;
    for (int it = 0; it < max_iter; ++it) {
      Vector w = cov_times(v);
      lambda = orthonormalize(w);
      if (lambda <= 1e-12 * total_var) break;
      double diff = 0.0;
      for (std::size_t i = 0; i < dim; ++i) diff = std::max(diff, std::abs(w[i] - v[i]));
      v = std::move(w);
      if (diff < tol) break;
    }
    if (!(lambda > 1e-12 * total_var)) {
      res.rank_deficient = true;
      break;
    }
    // Rayleigh quotient for the final eigenvalue.
    const Vector cv = cov_times(v);
    res.eigenvalues.push_back(dot(v, cv));
    res.components.push_back(std::move(v));
  }
  if (res.components.size() < k) res.rank_deficient = true;
  for (double ev : res.eigenvalues) {
    res.explained_variance_ratio.push_back(total_var > 0.0 ? ev / total_var : 0.0);
  }
  res.projections.assign(n, Vector(res.components.size()));
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < res.components.size(); ++c) {
      res.projections[r][c] = dot(x[r], res.components[c]);
    }
  }
  return res;
}

struct Histogram {
  Vector edges;                       // bins + 1 edges over [0, upper]
  std::vector<std::size_t> counts;
};

/// Equal-width histogram over [0, upper]; the top edge is inclusive.
inline Histogram stress_histogram(std::span<const double> stress, std::size_t bins,
                                  double upper = 1.0) {
  if (bins == 0) throw ConfigError("stress_histogram: need at least one bin");
  if (stress.empty()) throw ConfigError("stress_histogram: empty stress trace");
  Histogram h;
  h.counts.assign(bins, 0);
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges[b] = upper * static_cast<double>(b) / static_cast<double>(bins);
  }
  for (double s : stress) {
    const double clamped = std::clamp(s, 0.0, upper);
    auto b = static_cast<std::size_t>(clamped / upper * static_cast<double>(bins));
    if (b >= bins) b = bins - 1;
    ++h.counts[b];
  }
  return h;
}

}  // namespace sal::analysis
