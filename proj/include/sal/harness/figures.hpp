#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "sal/analysis.hpp"
#include "sal/harness/format.hpp"
#include "sal/harness/run.hpp"

namespace sal {

// Figure data as whitespace-free CSV; the first line is a '#' comment
// naming the axes so gnuplot skips it.

inline std::string surface_csv(const analysis::SurfaceGrid& g) {
  std::string out = "# alpha along dir1, beta along dir2, loss at center + alpha*dir1 + beta*dir2\n";
  out += "alpha,beta,loss\n";
  for (std::size_t i = 0; i < g.coords.size(); ++i) {
    for (std::size_t j = 0; j < g.coords.size(); ++j) {
      out += io::format_double(g.coords[i]) + "," + io::format_double(g.coords[j]) + "," +
             io::format_double(g.values[i][j]) + "\n";
    }
    out += "\n";
  }
  return out;
}

inline std::string trajectory_csv(const std::vector<int>& epochs, const analysis::PcaResult& pca) {
  std::string out = "# weight snapshots projected on principal components; explained variance ratio";
  for (double r : pca.explained_variance_ratio) out += " " + io::format_double(r);
  if (pca.rank_deficient) out += " (rank deficient)";
  out += "\nepoch";
  for (std::size_t c = 0; c < pca.components.size(); ++c) out += ",pc" + std::to_string(c + 1);
  out += "\n";
  for (std::size_t r = 0; r < pca.projections.size(); ++r) {
    out += std::to_string(epochs[r]);
    for (double v : pca.projections[r]) out += "," + io::format_double(v);
    out += "\n";
  }
  return out;
}

inline std::string histogram_csv(const analysis::Histogram& h) {
  std::string out = "# stress bins over [0, s_max]; count = epochs whose stress falls in the bin\n";
  out += "bin_low,bin_high,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out += io::format_double(h.edges[b]) + "," + io::format_double(h.edges[b + 1]) + "," +
           std::to_string(h.counts[b]) + "\n";
  }
  return out;
}

/// PCA of a run's weight snapshots (plus its final weights when they are
/// newer than the last snapshot).
inline std::pair<std::vector<int>, analysis::PcaResult> run_trajectory(const RunArtifact& art,
                                                                       std::size_t k = 3) {
  std::vector<int> epochs;
  std::vector<analysis::Vector> points;
  for (const auto& s : art.snapshots) {
    epochs.push_back(s.epoch);
    points.push_back(s.params.flatten());
  }
  const int last = static_cast<int>(art.rows.size());
  if (epochs.empty() || epochs.back() < last) {
    epochs.push_back(last);
    points.push_back(art.final_params.flatten());
  }
  if (points.size() < 2) throw ConfigError("trajectory: need at least two weight snapshots");
  k = std::min(k, points.size() - 1);
  return {std::move(epochs), analysis::pca_project(points, k)};
}

inline analysis::Histogram run_stress_histogram(const RunArtifact& art, std::size_t bins) {
  std::vector<double> stress;
  for (const auto& r : art.rows) stress.push_back(r.stress);
  return analysis::stress_histogram(stress, bins, art.config.effective_sal().s_max);
}

}  // namespace sal
