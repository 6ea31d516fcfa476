#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "sal/analysis.hpp"
#include "sal/harness/format.hpp"
#include "sal/landscape.hpp"
#include "sal/nn.hpp"
#include "sal/rng.hpp"

namespace sal {

struct TheoryCheck {
  std::string name;
  double measured = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

namespace detail {

inline TheoryCheck make_check(std::string name, double measured, double expected, double tol) {
  return {std::move(name), measured, expected, tol, std::abs(measured - expected) <= tol};
}

inline analysis::LossFn landscape_loss_fn(const LandscapeSpec& spec) {
  return [spec](std::span<const double> w) { return landscape_loss(spec, w); };
}

inline analysis::GradFn landscape_grad_fn(const LandscapeSpec& spec) {
  return [spec](std::span<const double> w) { return landscape_eval(spec, w).gradient; };
}

}  // namespace detail

/// Mean loss increase under N(0, sigma^2 I) noise against sigma^2/2 tr(H).
/// The tolerance is 3 standard errors plus the exact distance between the
/// second-order prediction and the closed-form expectation.
inline TheoryCheck check_expected_loss(const std::string& name, const LandscapeSpec& spec,
                                       std::span<const double> w, double sigma, std::size_t n,
                                       std::uint64_t seed) {
  Rng rng = Rng::substream(seed, "probes");
  const auto at = landscape_eval(spec, w);
  const auto mc = analysis::expected_loss_under_noise(detail::landscape_loss_fn(spec), w, sigma, n, rng);
  const double predicted = 0.5 * sigma * sigma * at.hessian_trace;
  const double remainder = std::abs(expected_loss_exact(spec, w, sigma) - at.loss - predicted);
  return detail::make_check(name, mc.mean - at.loss, predicted, 3.0 * mc.std_error + remainder);
}

inline TheoryCheck check_hutchinson(const std::string& name, const LandscapeSpec& spec,
                                    std::span<const double> w, int probes, double rel_tol,
                                    std::uint64_t seed) {
  Rng rng = Rng::substream(seed, "probes");
  const double exact = landscape_eval(spec, w).hessian_trace;
  auto hvp = analysis::make_fd_hvp(detail::landscape_grad_fn(spec), {w.begin(), w.end()});
  const auto est = analysis::hutchinson_trace(hvp, spec.dim, probes, rng);
  return detail::make_check(name, est.estimate, exact, rel_tol * std::abs(exact));
}

/// Largest relative error between backprop and central differences over
/// `draws` random small MLPs.
inline double mlp_gradient_max_error(int draws, std::uint64_t seed, double h = 1e-5) {
  Rng rng = Rng::substream(seed, "init");
  double worst = 0.0;
  for (int d = 0; d < draws; ++d) {
    nn::MlpSpec spec;
    const std::size_t in = 1 + rng.below(4);
    const std::size_t hidden = 2 + rng.below(5);
    const std::size_t out = 2 + rng.below(3);
    spec.widths = {in, hidden, out};
    if (rng.below(2) == 1) spec.widths.insert(spec.widths.begin() + 2, 2 + rng.below(4));
    spec.activations = {rng.below(2) == 0 ? nn::Activation::Tanh : nn::Activation::Relu};
    spec.output = rng.below(2) == 0 ? nn::OutputKind::Softmax : nn::OutputKind::Identity;
    const auto loss_kind = spec.output == nn::OutputKind::Softmax && rng.below(2) == 0
                               ? nn::LossKind::CrossEntropy
                               : nn::LossKind::Mse;
    spec.seed = rng.next_u64();
    ParameterSet params = nn::init_mlp(spec);
    for (auto& e : params) {
      for (double& v : e.tensor.values) v += 0.1 * rng.normal();
    }

    const std::size_t rows = 3 + rng.below(6);
    nn::Batch batch;
    batch.inputs = nn::Matrix(rows, in);
    for (double& x : batch.inputs.data) x = rng.normal();
    batch.labels.resize(rows);
    for (auto& y : batch.labels) y = static_cast<int>(rng.below(out));
    if (loss_kind == nn::LossKind::Mse) {
      batch.targets = nn::Matrix(rows, out);
      for (double& t : batch.targets.data) t = rng.normal();
    }

    const auto analytic = nn::loss_and_grad(params, spec, batch, loss_kind).grads.flatten();
    auto flat = params.flatten();
    for (std::size_t i = 0; i < flat.size(); ++i) {
      const double w0 = flat[i];
      flat[i] = w0 + h;
      params.assign_flat(flat);
      const double lp = nn::loss_and_grad(params, spec, batch, loss_kind).loss;
      flat[i] = w0 - h;
      params.assign_flat(flat);
      const double lm = nn::loss_and_grad(params, spec, batch, loss_kind).loss;
      flat[i] = w0;
      const double numeric = (lp - lm) / (2.0 * h);
      const double err = std::abs(analytic[i] - numeric) /
                         std::max(1e-6, std::abs(analytic[i]) + std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

/// The fixture table behind `verify-theory`.
inline std::vector<TheoryCheck> run_theory_checks(std::uint64_t seed = 20240501) {
  std::vector<TheoryCheck> out;
  const auto quad = LandscapeSpec::quadratic({1.0, 2.0, 3.0});
  const std::vector<double> origin3(3, 0.0);
  out.push_back(check_expected_loss("expected loss, quadratic a=(1,2,3), sigma=0.1", quad, origin3,
                                    0.1, 100000, seed));

  const auto quad_iso = LandscapeSpec::quadratic({0.5, 0.5, 4.0, 1.0});
  const std::vector<double> w4{0.3, -0.2, 0.1, 0.7};
  out.push_back(check_expected_loss("expected loss, quadratic a=(0.5,0.5,4,1), off-centre", quad_iso,
                                    w4, 0.2, 100000, seed + 1));

  const auto dw = make_double_well(0.3, 1.0, 3.0);
  out.push_back(check_expected_loss("expected loss, double well, flat minimum, sigma=0.05", dw.spec,
                                    dw.flat_center, 0.05, 100000, seed + 2));
  out.push_back(check_expected_loss("expected loss, double well, sharp minimum, sigma=0.02",
                                    dw.spec, dw.sharp_center, 0.02, 100000, seed + 3));

  const std::vector<double> ones3(3, 1.0);
  out.push_back(check_hutchinson("hutchinson, quadratic a=(1,2,3), 1000 probes", quad, ones3, 1000,
                                 0.10, seed + 4));
  const auto ident = LandscapeSpec::quadratic(std::vector<double>(5, 1.0));
  out.push_back(check_hutchinson("hutchinson, identity dim 5, 1000 probes", ident,
                                 std::vector<double>(5, 0.5), 1000, 0.10, seed + 5));
  const auto dense_ish = make_double_well(0.3, 1.0, 3.0, 1.0, 1.0, 4);
  std::vector<double> off(4, 0.1);
  off[0] = 2.9;
  out.push_back(check_hutchinson("hutchinson, double well dim 4, 1000 probes", dense_ish.spec, off,
                                 1000, 0.10, seed + 6));

  const double ratio_measured =
      landscape_eval(dw.spec, dw.sharp_center).hessian_trace /
      landscape_eval(dw.spec, dw.flat_center).hessian_trace;
  const double ratio_bound = std::pow(1.0 / 0.3, 2);
  out.push_back({"double well trace ratio, sharp / flat >= (flat_w/sharp_w)^2 (1% slack)",
                 ratio_measured, ratio_bound, 0.0, ratio_measured >= 0.99 * ratio_bound});

  const double grad_err = mlp_gradient_max_error(20, seed + 7);
  out.push_back({"mlp gradient check, 20 draws, max relative error < 1e-4", grad_err, 0.0, 1e-4,
                 grad_err < 1e-4});
  return out;
}

inline std::string theory_table(const std::vector<TheoryCheck>& checks) {
  std::ostringstream o;
  for (const auto& c : checks) {
    o << (c.passed ? "PASS" : "FAIL") << "  " << c.name << "  measured=" << io::format_double(c.measured)
      << " expected=" << io::format_double(c.expected) << " tol=" << io::format_double(c.tolerance)
      << "\n";
  }
  return o.str();
}

}  // namespace sal
