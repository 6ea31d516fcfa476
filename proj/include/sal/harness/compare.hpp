#pragma once

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sal/error.hpp"
#include "sal/harness/config.hpp"
#include "sal/harness/format.hpp"
#include "sal/harness/run.hpp"

namespace sal {

struct InterventionSummary {
  int noise = 0;
  int plastic = 0;
  int revert = 0;

  static InterventionSummary of(const RunArtifact& a) {
    return {a.count(InterventionKind::Noise), a.count(InterventionKind::Plastic),
            a.count(InterventionKind::Revert)};
  }
  friend bool operator==(const InterventionSummary&, const InterventionSummary&) = default;
};

struct GapRow {
  int epoch = 0;
  double baseline_accuracy = 0.0;
  double sal_accuracy = 0.0;
  double accuracy_gap = 0.0;  // sal - baseline
  double baseline_loss = 0.0;
  double sal_loss = 0.0;
};

/// Baseline-vs-SAL comparison of two runs of the same task.
struct ComparisonReport {
  std::string task;
  std::vector<GapRow> rows;
  double final_loss_delta = 0.0;  // sal - baseline
  std::optional<double> final_trace_delta;
  InterventionSummary baseline_events;
  InterventionSummary sal_events;
};

inline ComparisonReport compare_runs(const RunArtifact& baseline, const RunArtifact& sal) {
  const auto task_a = task_signature(baseline.config);
  const auto task_b = task_signature(sal.config);
  if (task_a != task_b) {
    throw ConfigError("compare: runs are on different tasks (" + task_a + " vs " + task_b + ")");
  }
  if (baseline.rows.size() != sal.rows.size()) {
    throw ConfigError("compare: epoch counts differ (" + std::to_string(baseline.rows.size()) +
                      " vs " + std::to_string(sal.rows.size()) + ")");
  }
  if (baseline.rows.empty()) throw ConfigError("compare: runs have no epochs");
  ComparisonReport rep;
  rep.task = task_a;
  for (std::size_t i = 0; i < baseline.rows.size(); ++i) {
    const auto& a = baseline.rows[i];
    const auto& b = sal.rows[i];
    rep.rows.push_back({a.epoch, a.accuracy, b.accuracy, b.accuracy - a.accuracy, a.loss, b.loss});
  }
  rep.final_loss_delta = sal.rows.back().loss - baseline.rows.back().loss;
  if (baseline.final_trace && sal.final_trace) {
    rep.final_trace_delta = *sal.final_trace - *baseline.final_trace;
  }
  rep.baseline_events = InterventionSummary::of(baseline);
  rep.sal_events = InterventionSummary::of(sal);
  return rep;
}

inline std::string comparison_csv(const ComparisonReport& rep) {
  std::string out = "epoch,baseline_accuracy,sal_accuracy,accuracy_gap,baseline_loss,sal_loss\n";
  for (const auto& r : rep.rows) {
    out += std::to_string(r.epoch) + "," + io::format_double(r.baseline_accuracy) + "," +
           io::format_double(r.sal_accuracy) + "," + io::format_double(r.accuracy_gap) + "," +
           io::format_double(r.baseline_loss) + "," + io::format_double(r.sal_loss) + "\n";
  }
  return out;
}

inline std::string comparison_text(const ComparisonReport& rep) {
  std::ostringstream o;
  const auto& last = rep.rows.back();
  o << "task: " << rep.task << "\n"
    << "epochs: " << rep.rows.size() << "\n"
    << "final accuracy: baseline " << io::format_double(last.baseline_accuracy) << ", sal "
    << io::format_double(last.sal_accuracy) << ", gap " << io::format_double(last.accuracy_gap) << "\n"
    << "final loss delta (sal - baseline): " << io::format_double(rep.final_loss_delta) << "\n"
    << "final trace delta (sal - baseline): "
    << (rep.final_trace_delta ? io::format_double(*rep.final_trace_delta) : std::string("n/a")) << "\n"
    << "interventions baseline: noise " << rep.baseline_events.noise << ", plastic "
    << rep.baseline_events.plastic << ", revert " << rep.baseline_events.revert << "\n"
    << "interventions sal: noise " << rep.sal_events.noise << ", plastic "
    << rep.sal_events.plastic << ", revert " << rep.sal_events.revert << "\n";
  return o.str();
}

struct ArmStats {
  std::size_t runs = 0;
  double mean_final_accuracy = 0.0;
  double mean_final_loss = 0.0;
  std::optional<double> mean_final_trace;
  std::optional<double> escape_rate;  // fraction of runs ending in the other basin
  InterventionSummary events;
};

/// Seed-ensemble comparison (one run per seed and arm).
struct EnsembleReport {
  std::string task;
  ArmStats baseline;
  ArmStats sal;
  std::vector<double> mean_accuracy_gap;  // per epoch
};

inline ArmStats arm_stats(const std::vector<RunArtifact>& runs) {
  ArmStats s;
  s.runs = runs.size();
  double trace_sum = 0.0;
  bool all_traces = true;
  bool has_basin = true;
  std::size_t escaped = 0;
  for (const auto& r : runs) {
    if (r.rows.empty()) throw ConfigError("ensemble: run without epochs");
    s.mean_final_accuracy += r.rows.back().accuracy;
    s.mean_final_loss += r.rows.back().loss;
    if (r.final_trace) trace_sum += *r.final_trace; else all_traces = false;
    if (r.final_basin.empty()) has_basin = false;
    const std::string start = r.config.task.init_basin;
    if (!r.final_basin.empty() && r.final_basin != "none" && r.final_basin != start) ++escaped;
    s.events.noise += r.count(InterventionKind::Noise);
    s.events.plastic += r.count(InterventionKind::Plastic);
    s.events.revert += r.count(InterventionKind::Revert);
  }
  const double n = static_cast<double>(runs.size());
  s.mean_final_accuracy /= n;
  s.mean_final_loss /= n;
  if (all_traces) s.mean_final_trace = trace_sum / n;
  if (has_basin) s.escape_rate = static_cast<double>(escaped) / n;
  return s;
}

inline EnsembleReport compare_ensembles(const std::vector<RunArtifact>& baseline,
                                        const std::vector<RunArtifact>& sal) {
  if (baseline.empty() || sal.empty()) throw ConfigError("compare: empty ensemble");
  EnsembleReport rep;
  rep.task = task_signature(baseline.front().config);
  for (const auto* arm : {&baseline, &sal}) {
    for (const auto& r : *arm) {
      if (task_signature(r.config) != rep.task) throw ConfigError("compare: ensemble mixes tasks");
      if (r.rows.size() != baseline.front().rows.size()) {
        throw ConfigError("compare: ensemble runs differ in epoch count");
      }
    }
  }
  rep.baseline = arm_stats(baseline);
  rep.sal = arm_stats(sal);
  const std::size_t epochs = baseline.front().rows.size();
  rep.mean_accuracy_gap.assign(epochs, 0.0);
  for (std::size_t e = 0; e < epochs; ++e) {
    double a = 0.0, b = 0.0;
    for (const auto& r : baseline) a += r.rows[e].accuracy;
    for (const auto& r : sal) b += r.rows[e].accuracy;
    rep.mean_accuracy_gap[e] = b / static_cast<double>(sal.size()) - a / static_cast<double>(baseline.size());
  }
  return rep;
}

inline std::string ensemble_text(const EnsembleReport& rep) {
  std::ostringstream o;
  auto arm = [&](const char* name, const ArmStats& s) {
    o << name << ": runs " << s.runs << ", mean final accuracy "
      << io::format_double(s.mean_final_accuracy) << ", mean final loss "
      << io::format_double(s.mean_final_loss) << ", mean final trace "
      << (s.mean_final_trace ? io::format_double(*s.mean_final_trace) : std::string("n/a"))
      << ", escape rate "
      << (s.escape_rate ? io::format_double(*s.escape_rate) : std::string("n/a"))
      << ", interventions noise " << s.events.noise << " plastic " << s.events.plastic
      << " revert " << s.events.revert << "\n";
  };
  o << "task: " << rep.task << "\n";
  arm("baseline", rep.baseline);
  arm("sal", rep.sal);
  o << "final mean accuracy gap (sal - baseline): "
    << io::format_double(rep.mean_accuracy_gap.back()) << "\n";
  return o.str();
}

inline std::string ensemble_csv(const EnsembleReport& rep) {
  std::string out = "epoch,mean_accuracy_gap\n";
  for (std::size_t e = 0; e < rep.mean_accuracy_gap.size(); ++e) {
    out += std::to_string(e + 1) + "," + io::format_double(rep.mean_accuracy_gap[e]) + "\n";
  }
  return out;
}

/// Run directories below `dir` (itself, or its seed_* children).
inline std::vector<std::filesystem::path> run_dirs_in(const std::filesystem::path& dir) {
  if (std::filesystem::exists(dir / "summary.json")) return {dir};
  std::vector<std::filesystem::path> out;
  if (std::filesystem::is_directory(dir)) {
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
      if (e.is_directory() && std::filesystem::exists(e.path() / "summary.json")) {
        out.push_back(e.path());
      }
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw IoError("no run directories under '" + dir.string() + "'");
  return out;
}

}  // namespace sal
