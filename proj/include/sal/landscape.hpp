#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sal/error.hpp"

namespace sal {

/// One Gaussian well: -depth * exp(-|w - center|^2 / (2 width^2)).
struct GaussianWell {
  std::vector<double> center;
  double depth = 1.0;
  double width = 1.0;
};

enum class LandscapeKind { Quadratic, GaussianWells };

/// Analytic loss surface with closed-form gradient and Hessian trace.
struct LandscapeSpec {
  LandscapeKind kind = LandscapeKind::Quadratic;
  std::size_t dim = 0;
  std::vector<double> curvature;    // quadratic: diagonal of A, each > 0
  std::vector<GaussianWell> wells;  // gaussian_wells
  double offset = 0.0;              // added to the well sum

  static LandscapeSpec quadratic(std::vector<double> a) {
    LandscapeSpec s;
    s.kind = LandscapeKind::Quadratic;
    s.dim = a.size();
    s.curvature = std::move(a);
    s.validate();
    return s;
  }

  /// Wells with the offset chosen so the lowest well-centre value is 0.
  static LandscapeSpec gaussian_wells(std::vector<GaussianWell> wells);

  void validate() const {
    if (dim == 0) throw ConfigError("landscape: dimension must be >= 1");
    if (kind == LandscapeKind::Quadratic) {
      if (curvature.size() != dim) throw ConfigError("landscape: curvature length != dim");
      for (double a : curvature) {
        if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("landscape: curvature must be > 0");
      }
    } else {
      if (wells.empty()) throw ConfigError("landscape: need at least one well");
      for (const auto& w : wells) {
        if (w.center.size() != dim) throw ConfigError("landscape: well centre dimension != dim");
        if (!(w.depth > 0.0)) throw ConfigError("landscape: well depth must be > 0");
        if (!(w.width > 0.0)) throw ConfigError("landscape: well width must be > 0");
      }
    }
  }
};

struct LandscapeValue {
  double loss = 0.0;
  std::vector<double> gradient;
  double hessian_trace = 0.0;
};

namespace detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace detail

/// Loss, gradient and exact Hessian trace at `w`.
///
/// Quadratic: 0.5 sum a_i w_i^2, gradient a*w, trace sum a_i.
/// Wells: for r = w - c and s = width, each term -D e with e = exp(-|r|^2/2s^2)
/// contributes gradient (D/s^2) e r and trace (D/s^2) e (d - |r|^2/s^2).
inline LandscapeValue landscape_eval(const LandscapeSpec& spec, std::span<const double> w) {
  if (w.size() != spec.dim) {
    throw ShapeError("landscape_eval: got " + std::to_string(w.size()) + " coordinates, need " +
                     std::to_string(spec.dim));
  }
  LandscapeValue out;
  out.gradient.assign(spec.dim, 0.0);
  if (spec.kind == LandscapeKind::Quadratic) {
    for (std::size_t i = 0; i < spec.dim; ++i) {
      out.loss += 0.5 * spec.curvature[i] * w[i] * w[i];
      out.gradient[i] = spec.curvature[i] * w[i];
      out.hessian_trace += spec.curvature[i];
    }
    return out;
  }
  const double d = static_cast<double>(spec.dim);
  out.loss = spec.offset;
  for (const auto& well : spec.wells) {
    const double s2 = well.width * well.width;
    const double r2 = detail::squared_distance(w, well.center);
    const double e = std::exp(-r2 / (2.0 * s2));
    out.loss -= well.depth * e;
    const double k = well.depth * e / s2;
    for (std::size_t i = 0; i < spec.dim; ++i) out.gradient[i] += k * (w[i] - well.center[i]);
    out.hessian_trace += k * (d - r2 / s2);
  }
  return out;
}

inline double landscape_loss(const LandscapeSpec& spec, std::span<const double> w) {
  return landscape_eval(spec, w).loss;
}

/// Hessian trace contributed by one well at its own centre: depth * d / width^2.
inline double well_center_trace(const GaussianWell& well, std::size_t dim) {
  return well.depth * static_cast<double>(dim) / (well.width * well.width);
}

/// E[L(w + delta)] for delta ~ N(0, sigma^2 I), in closed form.
///
/// Quadratic: L(w) + sigma^2/2 tr(A). Each Gaussian well integrates to
/// -D (s^2/(s^2+sigma^2))^(d/2) exp(-|w-c|^2 / (2(s^2+sigma^2))).
inline double expected_loss_exact(const LandscapeSpec& spec, std::span<const double> w,
                                  double sigma) {
  const double var = sigma * sigma;
  if (spec.kind == LandscapeKind::Quadratic) {
    const auto v = landscape_eval(spec, w);
    return v.loss + 0.5 * var * v.hessian_trace;
  }
  const double half_d = 0.5 * static_cast<double>(spec.dim);
  double total = spec.offset;
  for (const auto& well : spec.wells) {
    const double s2 = well.width * well.width;
    const double r2 = detail::squared_distance(w, well.center);
    total -= well.depth * std::pow(s2 / (s2 + var), half_d) * std::exp(-r2 / (2.0 * (s2 + var)));
  }
  return total;
}

inline LandscapeSpec LandscapeSpec::gaussian_wells(std::vector<GaussianWell> wells) {
  LandscapeSpec s;
  s.kind = LandscapeKind::GaussianWells;
  s.dim = wells.empty() ? 0 : wells.front().center.size();
  s.wells = std::move(wells);
  s.validate();
  double lowest = std::numeric_limits<double>::infinity();
  for (const auto& well : s.wells) lowest = std::min(lowest, landscape_eval(s, well.center).loss);
  s.offset = -lowest;
  return s;
}

/// Two-basin fixture: a flat well at the origin and a sharp well at
/// `separation` along the first axis.
struct DoubleWell {
  LandscapeSpec spec;
  std::vector<double> sharp_center;
  std::vector<double> flat_center;
  double separation = 0.0;

  /// "sharp", "flat", or "none" for the basin nearer to `w` (within half the separation).
  std::string basin_of(std::span<const double> w) const {
    const double ds = std::sqrt(detail::squared_distance(w, sharp_center));
    const double df = std::sqrt(detail::squared_distance(w, flat_center));
    if (ds < 0.5 * separation) return "sharp";
    if (df < 0.5 * separation) return "flat";
    return "none";
  }
};

inline DoubleWell make_double_well(double sharp_width, double flat_width, double separation,
                                   double sharp_depth = 1.0, double flat_depth = 1.0,
                                   std::size_t dim = 2) {
  if (!(sharp_width > 0.0) || !(flat_width > 0.0)) {
    throw ConfigError("make_double_well: widths must be > 0");
  }
  if (sharp_width > flat_width) {
    throw ConfigError("make_double_well: sharp_width must not exceed flat_width");
  }
  if (!(separation > 0.0)) throw ConfigError("make_double_well: separation must be > 0");
  if (dim == 0) throw ConfigError("make_double_well: dim must be >= 1");
  DoubleWell dw;
  dw.separation = separation;
  dw.flat_center.assign(dim, 0.0);
  dw.sharp_center.assign(dim, 0.0);
  dw.sharp_center[0] = separation;
  dw.spec = LandscapeSpec::gaussian_wells({{dw.flat_center, flat_depth, flat_width},
                                           {dw.sharp_center, sharp_depth, sharp_width}});
  return dw;
}

}  // namespace sal
