#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "sal/analysis.hpp"
#include "sal/error.hpp"
#include "sal/harness/checkpoint.hpp"
#include "sal/harness/config.hpp"
#include "sal/harness/format.hpp"
#include "sal/harness/task.hpp"
#include "sal/optimizers.hpp"
#include "sal/perturbation.hpp"
#include "sal/rng.hpp"
#include "sal/sal_wrapper.hpp"
#include "sal/stress.hpp"

namespace sal {

struct EpochRow {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  double stress = 0.0;
  double grad_norm = 0.0;
  std::optional<double> trace;

  friend bool operator==(const EpochRow&, const EpochRow&) = default;
};

struct WeightSnapshot {
  int epoch = 0;
  ParameterSet params;
};

/// Complete record of one seeded run.
struct RunArtifact {
  RunConfig config;
  std::string status = "ok";  // ok | diverged | error
  std::string message;
  std::vector<EpochRow> rows;
  std::vector<bool> improved;
  std::vector<InterventionEvent> events;
  std::vector<double> epoch_seconds;  // excluded from golden comparisons
  std::vector<std::string> warnings;
  ParameterSet final_params;
  std::optional<double> final_trace;
  std::string final_basin;
  std::vector<WeightSnapshot> snapshots;

  int count(InterventionKind kind) const {
    int n = 0;
    for (const auto& e : events) n += e.kind == kind ? 1 : 0;
    return n;
  }
};

namespace detail {

inline double hutchinson_at(const Task& task, const ParameterSet& params, int probes, double step,
                            Rng& rng) {
  auto grad = task.grad_fn(params);
  auto w = params.flatten();
  const auto dim = w.size();
  auto hvp = analysis::make_fd_hvp(std::move(grad), std::move(w), step);
  return analysis::hutchinson_trace(hvp, dim, probes, rng).estimate;
}

}  // namespace detail

/// Runs the stress-aware training loop for one config.
///
/// Per epoch: mini-batch optimizer steps, epoch metrics, then the
/// StressController's epoch boundary (stress update, recovery check, noise,
/// plastic deformation). The artifact is always returned; a non-finite loss
/// or a numeric failure ends the run with status "diverged".
inline RunArtifact train_run(const RunConfig& cfg, const Task& task) {
  cfg.validate();
  RunArtifact art;
  art.config = cfg;
  const SalConfig sal_cfg = cfg.effective_sal();

  ParameterSet params = task.initial_parameters(cfg.seed);
  auto trainer = wrap_with_sal(Optimizer(cfg.optimizer), sal_cfg, cfg.seed);
  Rng data_rng = Rng::substream(cfg.seed, "data");
  Rng probe_rng = Rng::substream(cfg.seed, "probes");
  const StepFn step = [&trainer](ParameterSet& p, const ParameterSet& g) { trainer.step(p, g); };

  if (cfg.snapshot_every > 0) art.snapshots.push_back({0, params});

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      EpochMetrics m = task.train_epoch(params, step, data_rng, epoch);
      if (!std::isfinite(m.loss)) throw NumericError("non-finite epoch loss");
      EpochMetrics monitored = m;
      if (cfg.monitor == "validation") {
        monitored = task.evaluate_validation(params).value();
        monitored.epoch = epoch;
      }
      const auto outcome = trainer.end_epoch(params, monitored);
      for (const auto& w : outcome.warnings) {
        if (std::find(art.warnings.begin(), art.warnings.end(), w) == art.warnings.end()) {
          art.warnings.push_back(w);
        }
      }
      EpochRow row;
      row.epoch = epoch;
      row.loss = m.loss;
      row.accuracy = m.accuracy;
      row.stress = outcome.stress;
      row.grad_norm = analysis::grad_norm_sharpness(task.full_gradient(params));
      const bool last = epoch == cfg.epochs;
      if ((cfg.trace_every > 0 && epoch % cfg.trace_every == 0) || (last && cfg.trace_final)) {
        row.trace = detail::hutchinson_at(task, params, cfg.trace_probes, cfg.hvp_step, probe_rng);
      }
      art.rows.push_back(row);
      art.improved.push_back(outcome.improved);
      art.events.insert(art.events.end(), outcome.events.begin(), outcome.events.end());
      if (cfg.snapshot_every > 0 && epoch % cfg.snapshot_every == 0) {
        art.snapshots.push_back({epoch, params});
      }
    } catch (const NumericError& e) {
      art.status = "diverged";
      art.message = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }
    art.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  art.final_params = params;
  if (!art.rows.empty()) art.final_trace = art.rows.back().trace;
  art.final_basin = params.all_finite() ? task.basin(params) : std::string{};
  return art;
}

inline RunArtifact train_run(const RunConfig& cfg) {
  const auto task = make_task(cfg);
  return train_run(cfg, *task);
}

/// Replays the stress recurrence from the logged improvement flags and
/// plastic resets. Equals the logged stress column for a well-formed artifact.
inline std::vector<double> reconstruct_stress(const RunArtifact& art) {
  const SalConfig cfg = art.config.effective_sal();
  StressState state(cfg.s_max);
  std::vector<double> out;
  std::size_t ev = 0;
  for (std::size_t i = 0; i < art.improved.size(); ++i) {
    const int epoch = static_cast<int>(i) + 1;
    state = update_stress(state, art.improved[i], cfg, epoch);
    for (; ev < art.events.size() && art.events[ev].epoch <= epoch; ++ev) {
      if (art.events[ev].epoch == epoch && art.events[ev].kind == InterventionKind::Plastic) {
        state.s_g = 0.0;
      }
    }
    out.push_back(state.s_g);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Run directory I/O
//
//   config.echo     resolved config (INI)
//   epochs.csv      epoch,loss,accuracy,stress,grad_norm,trace
//   events.jsonl    one intervention per line
//   final.salckpt   final weights
//   summary.json    status, totals, improvement flags, wall-clock
//   snapshots/      epoch_NNNNN.salckpt when snapshot_every > 0
// ---------------------------------------------------------------------------

inline constexpr const char* kEpochsHeader = "epoch,loss,accuracy,stress,grad_norm,trace";

inline std::string epochs_csv(const RunArtifact& art) {
  std::string out = std::string(kEpochsHeader) + "\n";
  for (const auto& r : art.rows) {
    out += std::to_string(r.epoch) + "," + io::format_double(r.loss) + "," +
           io::format_double(r.accuracy) + "," + io::format_double(r.stress) + "," +
           io::format_double(r.grad_norm) + "," + (r.trace ? io::format_double(*r.trace) : "") + "\n";
  }
  return out;
}

inline nlohmann::ordered_json event_to_json(const InterventionEvent& e) {
  nlohmann::ordered_json j;
  j["epoch"] = e.epoch;
  j["kind"] = std::string(to_string(e.kind));
  j["sigma"] = e.sigma;
  j["layers"] = e.layers;
  j["stress_before"] = e.stress_before;
  j["stress_after"] = e.stress_after;
  return j;
}

inline InterventionEvent event_from_json(const nlohmann::json& j) {
  InterventionEvent e;
  e.epoch = j.at("epoch").get<int>();
  e.kind = intervention_kind_from_string(j.at("kind").get<std::string>());
  e.sigma = j.at("sigma").get<double>();
  e.layers = j.at("layers").get<std::vector<std::string>>();
  e.stress_before = j.at("stress_before").get<double>();
  e.stress_after = j.at("stress_after").get<double>();
  return e;
}

inline std::string events_jsonl(const RunArtifact& art) {
  std::string out;
  for (const auto& e : art.events) out += event_to_json(e).dump() + "\n";
  return out;
}

inline nlohmann::ordered_json summary_json(const RunArtifact& art) {
  nlohmann::ordered_json j;
  j["name"] = art.config.name;
  j["status"] = art.status;
  j["message"] = art.message;
  j["seed"] = art.config.seed;
  j["sal_enabled"] = art.config.sal_enabled;
  j["task"] = task_signature(art.config);
  j["epochs_completed"] = art.rows.size();
  if (!art.rows.empty()) {
    const auto& last = art.rows.back();
    j["final_loss"] = last.loss;
    j["final_accuracy"] = last.accuracy;
    j["final_grad_norm"] = last.grad_norm;
  }
  j["final_trace"] = art.final_trace ? nlohmann::json(*art.final_trace) : nlohmann::json();
  j["final_basin"] = art.final_basin;
  j["interventions"] = {{"noise", art.count(InterventionKind::Noise)},
                        {"plastic", art.count(InterventionKind::Plastic)},
                        {"revert", art.count(InterventionKind::Revert)}};
  j["improved"] = art.improved;
  j["warnings"] = art.warnings;
  j["epoch_seconds"] = art.epoch_seconds;
  return j;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_run_dir(const RunArtifact& art, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config.echo", echo_run_config(art.config));
  write_text(dir / "epochs.csv", epochs_csv(art));
  write_text(dir / "events.jsonl", events_jsonl(art));
  io::save_checkpoint(dir / "final.salckpt", art.final_params);
  write_text(dir / "summary.json", summary_json(art).dump(2) + "\n");
  if (!art.snapshots.empty()) {
    const auto snap_dir = dir / "snapshots";
    std::filesystem::create_directories(snap_dir);
    for (const auto& s : art.snapshots) {
      char name[32];
      std::snprintf(name, sizeof name, "epoch_%05d.salckpt", s.epoch);
      io::save_checkpoint(snap_dir / name, s.params);
    }
  }
}

inline std::vector<EpochRow> parse_epochs_csv(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kEpochsHeader) {
    throw IoError(origin + ": unexpected header (want '" + kEpochsHeader + "')");
  }
  std::vector<EpochRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 6) throw IoError(origin + ":" + std::to_string(line_no) + ": expected 6 fields");
    try {
      EpochRow r;
      r.epoch = static_cast<int>(io::parse_integer(f[0]));
      r.loss = io::parse_double(f[1]);
      r.accuracy = io::parse_double(f[2]);
      r.stress = io::parse_double(f[3]);
      r.grad_norm = io::parse_double(f[4]);
      if (!f[5].empty()) r.trace = io::parse_double(f[5]);
      rows.push_back(r);
    } catch (const ConfigError& e) {
      throw IoError(origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return rows;
}

/// Reads a run directory written by write_run_dir.
inline RunArtifact load_run_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a run directory: '" + dir.string() + "'");
  RunArtifact art;
  {
    std::istringstream in(read_text(dir / "config.echo"));
    art.config = parse_run_config(in);
  }
  art.rows = parse_epochs_csv(read_text(dir / "epochs.csv"), (dir / "epochs.csv").string());
  {
    std::istringstream in(read_text(dir / "events.jsonl"));
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty()) art.events.push_back(event_from_json(nlohmann::json::parse(line)));
    }
  }
  const auto summary = nlohmann::json::parse(read_text(dir / "summary.json"));
  art.status = summary.at("status").get<std::string>();
  art.message = summary.value("message", "");
  art.improved = summary.at("improved").get<std::vector<bool>>();
  art.epoch_seconds = summary.value("epoch_seconds", std::vector<double>{});
  art.warnings = summary.value("warnings", std::vector<std::string>{});
  art.final_basin = summary.value("final_basin", "");
  if (summary.contains("final_trace") && summary["final_trace"].is_number()) {
    art.final_trace = summary["final_trace"].get<double>();
  }
  art.final_params = io::load_checkpoint(dir / "final.salckpt");
  const auto snap_dir = dir / "snapshots";
  if (std::filesystem::is_directory(snap_dir)) {
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(snap_dir)) {
      if (e.path().extension() == ".salckpt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const auto stem = f.stem().string();
      const int epoch = static_cast<int>(io::parse_integer(stem.substr(stem.find('_') + 1)));
      art.snapshots.push_back({epoch, io::load_checkpoint(f)});
    }
  }
  return art;
}

}  // namespace sal
