#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "sal/error.hpp"
#include "sal/harness/format.hpp"
#include "sal/nn.hpp"
#include "sal/optimizers.hpp"
#include "sal/stress.hpp"

namespace sal {

enum class TaskKind { Landscape, TwoMoons, Csv, Frozen };

inline std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::Landscape: return "landscape";
    case TaskKind::TwoMoons: return "two_moons";
    case TaskKind::Csv: return "csv";
    case TaskKind::Frozen: return "frozen";
  }
  return "?";
}

/// Task section of a run config. Only the keys of the selected kind matter.
struct TaskConfig {
  TaskKind kind = TaskKind::TwoMoons;

  // landscape
  std::string landscape = "double_well";  // quadratic | double_well
  std::vector<double> curvature{1.0, 2.0, 3.0};
  std::vector<double> init;               // explicit start point; empty = derived
  double sharp_width = 0.1;
  double flat_width = 1.0;
  double separation = 1.5;
  double sharp_depth = 1.0;
  double flat_depth = 1.0;
  int dim = 2;
  std::string init_basin = "sharp";       // double well start basin
  double init_jitter = 0.0;

  // two_moons
  int n = 200;
  double noise = 0.1;

  // csv
  std::string path;
  std::string label_column = "label";
  bool standardize = true;

  // two_moons / csv
  double validation_fraction = 0.0;

  // frozen
  double frozen_loss = 1.0;
  int frozen_entries = 4;
};

struct ModelConfig {
  std::vector<std::size_t> widths{2, 16, 16, 2};
  std::string activation = "relu";
  std::string output = "softmax";
  std::string loss = "cross_entropy";
};

/// Everything needed to reproduce one run.
struct RunConfig {
  std::string name = "run";
  int epochs = 50;
  int batch_size = 64;
  std::uint64_t seed = 0;
  bool sal_enabled = true;
  std::string output_dir = "runs/run";
  int trace_every = 0;     // Hutchinson trace every k epochs (0 = final epoch only if trace_final)
  bool trace_final = true;
  int trace_probes = 100;
  double hvp_step = 1e-4;
  int snapshot_every = 0;  // weight snapshots for trajectory analysis (0 = off)
  std::string monitor = "train";  // train | validation

  TaskConfig task;
  ModelConfig model;
  OptimizerConfig optimizer;
  SalConfig sal;
  std::optional<bool> accuracy_condition;  // unset: on for classifiers, off for landscapes

  /// SAL settings actually used by the run.
  SalConfig effective_sal() const {
    SalConfig cfg = sal;
    cfg.accuracy_condition_enabled = accuracy_condition.value_or(task.kind != TaskKind::Landscape);
    if (!sal_enabled) {
      const auto off = SalConfig::disabled();
      cfg.s_noise = off.s_noise;
      cfg.s_yield = off.s_yield;
    }
    return cfg;
  }

  void validate() const {
    if (epochs < 1) throw ConfigError("run.epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("run.batch_size must be >= 1");
    if (trace_every < 0) throw ConfigError("run.trace_every must be >= 0");
    if (trace_probes < 1) throw ConfigError("run.trace_probes must be >= 1");
    if (!(hvp_step > 0.0)) throw ConfigError("run.hvp_step must be > 0");
    if (snapshot_every < 0) throw ConfigError("run.snapshot_every must be >= 0");
    if (monitor != "train" && monitor != "validation") {
      throw ConfigError("run.monitor must be 'train' or 'validation'");
    }
    if (monitor == "validation" && !(task.validation_fraction > 0.0)) {
      throw ConfigError("run.monitor = validation needs task.validation_fraction > 0");
    }
    if (!(task.validation_fraction >= 0.0 && task.validation_fraction < 1.0)) {
      throw ConfigError("task.validation_fraction must be in [0, 1)");
    }
    if (task.kind == TaskKind::Landscape && task.landscape != "quadratic" &&
        task.landscape != "double_well") {
      throw ConfigError("task.landscape must be 'quadratic' or 'double_well'");
    }
    optimizer.validate();
    effective_sal().validate();
  }
};

namespace detail {

using boost::property_tree::ptree;

inline std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(io::parse_double(item, key));
  return out;
}

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": '" + s + "' is not a boolean");
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    if constexpr (std::is_floating_point_v<T>) {
      out += io::format_double(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

/// Key/value reader that rejects keys nobody asked for.
class SectionReader {
 public:
  SectionReader(const ptree& root, std::string section) : section_(std::move(section)) {
    if (auto child = root.get_child_optional(section_)) {
      for (const auto& [key, node] : *child) values_[key] = node.get_value<std::string>();
    }
  }

  std::optional<std::string> raw(const std::string& key) {
    seen_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return std::nullopt;
    return it->second;
  }

  std::string full(const std::string& key) const { return section_ + "." + key; }

  void read(const std::string& key, std::string& out) {
    if (auto v = raw(key)) out = *v;
  }
  void read(const std::string& key, double& out) {
    if (auto v = raw(key)) out = io::parse_double(*v, full(key));
  }
  void read(const std::string& key, int& out) {
    if (auto v = raw(key)) out = static_cast<int>(io::parse_integer(*v, full(key)));
  }
  void read(const std::string& key, std::uint64_t& out) {
    if (auto v = raw(key)) {
      const auto x = io::parse_integer(*v, full(key));
      if (x < 0) throw ConfigError(full(key) + " must be >= 0");
      out = static_cast<std::uint64_t>(x);
    }
  }
  void read(const std::string& key, bool& out) {
    if (auto v = raw(key)) out = parse_bool(*v, full(key));
  }
  void read(const std::string& key, std::vector<double>& out) {
    if (auto v = raw(key)) out = parse_double_list(*v, full(key));
  }
  void read(const std::string& key, std::vector<std::size_t>& out) {
    if (auto v = raw(key)) {
      out.clear();
      for (double d : parse_double_list(*v, full(key))) {
        if (d < 1 || d != static_cast<double>(static_cast<std::size_t>(d))) {
          throw ConfigError(full(key) + ": widths must be positive integers");
        }
        out.push_back(static_cast<std::size_t>(d));
      }
    }
  }

  void reject_unknown() const {
    for (const auto& [key, value] : values_) {
      if (!seen_.contains(key)) throw ConfigError("unknown config key '" + full(key) + "'");
    }
  }

 private:
  std::string section_;
  std::map<std::string, std::string> values_;
  std::set<std::string> seen_;
};

}  // namespace detail

/// Parses INI text: sections [run], [task], [model], [optimizer], [sal].
inline RunConfig parse_run_config(std::istream& in) {
  detail::ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& [section, node] : root) {
    static const std::set<std::string> known{"run", "task", "model", "optimizer", "sal"};
    if (!known.contains(section)) throw ConfigError("unknown config section [" + section + "]");
    if (node.empty() && !node.data().empty()) {
      throw ConfigError("config key '" + section + "' must live inside a section");
    }
  }

  RunConfig cfg;
  {
    detail::SectionReader r(root, "run");
    r.read("name", cfg.name);
    r.read("epochs", cfg.epochs);
    r.read("batch_size", cfg.batch_size);
    r.read("seed", cfg.seed);
    r.read("sal_enabled", cfg.sal_enabled);
    r.read("output_dir", cfg.output_dir);
    r.read("trace_every", cfg.trace_every);
    r.read("trace_final", cfg.trace_final);
    r.read("trace_probes", cfg.trace_probes);
    r.read("hvp_step", cfg.hvp_step);
    r.read("snapshot_every", cfg.snapshot_every);
    r.read("monitor", cfg.monitor);
    r.reject_unknown();
  }
  {
    detail::SectionReader r(root, "task");
    std::string kind = "two_moons";
    r.read("kind", kind);
    if (kind == "landscape") cfg.task.kind = TaskKind::Landscape;
    else if (kind == "two_moons") cfg.task.kind = TaskKind::TwoMoons;
    else if (kind == "csv") cfg.task.kind = TaskKind::Csv;
    else if (kind == "frozen") cfg.task.kind = TaskKind::Frozen;
    else throw ConfigError("task.kind: unknown task '" + kind + "'");
    auto& t = cfg.task;
    r.read("landscape", t.landscape);
    r.read("curvature", t.curvature);
    r.read("init", t.init);
    r.read("sharp_width", t.sharp_width);
    r.read("flat_width", t.flat_width);
    r.read("separation", t.separation);
    r.read("sharp_depth", t.sharp_depth);
    r.read("flat_depth", t.flat_depth);
    r.read("dim", t.dim);
    r.read("init_basin", t.init_basin);
    r.read("init_jitter", t.init_jitter);
    r.read("n", t.n);
    r.read("noise", t.noise);
    r.read("path", t.path);
    r.read("label_column", t.label_column);
    r.read("standardize", t.standardize);
    r.read("validation_fraction", t.validation_fraction);
    r.read("frozen_loss", t.frozen_loss);
    r.read("frozen_entries", t.frozen_entries);
    r.reject_unknown();
  }
  {
    detail::SectionReader r(root, "model");
    r.read("widths", cfg.model.widths);
    r.read("activation", cfg.model.activation);
    r.read("output", cfg.model.output);
    r.read("loss", cfg.model.loss);
    r.reject_unknown();
  }
  {
    detail::SectionReader r(root, "optimizer");
    std::string kind(to_string(cfg.optimizer.kind));
    r.read("kind", kind);
    cfg.optimizer.kind = optimizer_kind_from_string(kind);
    r.read("learning_rate", cfg.optimizer.learning_rate);
    r.read("beta1", cfg.optimizer.beta1);
    r.read("beta2", cfg.optimizer.beta2);
    r.read("epsilon", cfg.optimizer.epsilon);
    r.read("momentum", cfg.optimizer.momentum);
    r.read("rho", cfg.optimizer.rho);
    r.reject_unknown();
  }
  {
    detail::SectionReader r(root, "sal");
    auto& s = cfg.sal;
    r.read("rho", s.rho);
    r.read("theta", s.theta);
    r.read("eps_loss", s.eps_loss);
    r.read("eps_acc", s.eps_acc);
    r.read("s_noise", s.s_noise);
    r.read("s_yield", s.s_yield);
    r.read("s_max", s.s_max);
    r.read("delta", s.delta);
    r.read("lambda", s.lambda);
    r.read("warmup_epochs", s.warmup_epochs);
    r.read("plastic_layer_count", s.plastic_layer_count);
    r.read("plastic_retain", s.plastic_retain);
    r.read("plastic_noise_param", s.plastic_noise_param);
    r.read("plastic_noise_is_std", s.plastic_noise_is_std);
    r.read("revert_tolerance", s.revert_tolerance);
    r.read("revert_patience", s.revert_patience);
    r.read("reset_optimizer_on_plastic", s.reset_optimizer_on_plastic);
    if (auto v = r.raw("accuracy_condition")) {
      cfg.accuracy_condition = detail::parse_bool(*v, "sal.accuracy_condition");
    }
    r.reject_unknown();
  }
  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  return parse_run_config(in);
}

/// Task section as canonical text; two runs are comparable iff these match.
inline std::string task_signature(const RunConfig& cfg) {
  const auto& t = cfg.task;
  std::string s = "kind=" + std::string(to_string(t.kind));
  switch (t.kind) {
    case TaskKind::Landscape:
      s += ";landscape=" + t.landscape;
      if (t.landscape == "quadratic") {
        s += ";curvature=" + detail::join(t.curvature);
      } else {
        s += ";sharp_width=" + io::format_double(t.sharp_width) +
             ";flat_width=" + io::format_double(t.flat_width) +
             ";separation=" + io::format_double(t.separation) +
             ";sharp_depth=" + io::format_double(t.sharp_depth) +
             ";flat_depth=" + io::format_double(t.flat_depth) + ";dim=" + std::to_string(t.dim);
      }
      break;
    case TaskKind::TwoMoons:
      s += ";n=" + std::to_string(t.n) + ";noise=" + io::format_double(t.noise);
      break;
    case TaskKind::Csv:
      s += ";path=" + t.path + ";label_column=" + t.label_column;
      break;
    case TaskKind::Frozen:
      s += ";frozen_loss=" + io::format_double(t.frozen_loss);
      break;
  }
  if (t.kind == TaskKind::TwoMoons || t.kind == TaskKind::Csv) {
    s += ";widths=" + detail::join(cfg.model.widths) + ";loss=" + cfg.model.loss;
  }
  return s;
}

/// Fully resolved config in the same INI dialect it was read from.
inline std::string echo_run_config(const RunConfig& cfg) {
  using io::format_double;
  std::ostringstream o;
  const auto b = [](bool v) { return v ? "true" : "false"; };
  o << "[run]\n"
    << "name = " << cfg.name << "\n"
    << "epochs = " << cfg.epochs << "\n"
    << "batch_size = " << cfg.batch_size << "\n"
    << "seed = " << cfg.seed << "\n"
    << "sal_enabled = " << b(cfg.sal_enabled) << "\n"
    << "output_dir = " << cfg.output_dir << "\n"
    << "trace_every = " << cfg.trace_every << "\n"
    << "trace_final = " << b(cfg.trace_final) << "\n"
    << "trace_probes = " << cfg.trace_probes << "\n"
    << "hvp_step = " << format_double(cfg.hvp_step) << "\n"
    << "snapshot_every = " << cfg.snapshot_every << "\n"
    << "monitor = " << cfg.monitor << "\n\n";
  const auto& t = cfg.task;
  o << "[task]\n"
    << "kind = " << to_string(t.kind) << "\n"
    << "landscape = " << t.landscape << "\n"
    << "curvature = " << detail::join(t.curvature) << "\n";
  if (!t.init.empty()) o << "init = " << detail::join(t.init) << "\n";
  o << "sharp_width = " << format_double(t.sharp_width) << "\n"
    << "flat_width = " << format_double(t.flat_width) << "\n"
    << "separation = " << format_double(t.separation) << "\n"
    << "sharp_depth = " << format_double(t.sharp_depth) << "\n"
    << "flat_depth = " << format_double(t.flat_depth) << "\n"
    << "dim = " << t.dim << "\n"
    << "init_basin = " << t.init_basin << "\n"
    << "init_jitter = " << format_double(t.init_jitter) << "\n"
    << "n = " << t.n << "\n"
    << "noise = " << format_double(t.noise) << "\n";
  if (!t.path.empty()) o << "path = " << t.path << "\n";
  o << "label_column = " << t.label_column << "\n"
    << "standardize = " << b(t.standardize) << "\n"
    << "validation_fraction = " << format_double(t.validation_fraction) << "\n"
    << "frozen_loss = " << format_double(t.frozen_loss) << "\n"
    << "frozen_entries = " << t.frozen_entries << "\n\n";
  o << "[model]\n"
    << "widths = " << detail::join(cfg.model.widths) << "\n"
    << "activation = " << cfg.model.activation << "\n"
    << "output = " << cfg.model.output << "\n"
    << "loss = " << cfg.model.loss << "\n\n";
  const auto& op = cfg.optimizer;
  o << "[optimizer]\n"
    << "kind = " << to_string(op.kind) << "\n"
    << "learning_rate = " << format_double(op.learning_rate) << "\n"
    << "beta1 = " << format_double(op.beta1) << "\n"
    << "beta2 = " << format_double(op.beta2) << "\n"
    << "epsilon = " << format_double(op.epsilon) << "\n"
    << "momentum = " << format_double(op.momentum) << "\n"
    << "rho = " << format_double(op.rho) << "\n\n";
  const auto& s = cfg.sal;
  o << "[sal]\n"
    << "rho = " << format_double(s.rho) << "\n"
    << "theta = " << format_double(s.theta) << "\n"
    << "eps_loss = " << format_double(s.eps_loss) << "\n"
    << "eps_acc = " << format_double(s.eps_acc) << "\n"
    << "s_noise = " << format_double(s.s_noise) << "\n"
    << "s_yield = " << format_double(s.s_yield) << "\n"
    << "s_max = " << format_double(s.s_max) << "\n"
    << "delta = " << format_double(s.delta) << "\n"
    << "lambda = " << format_double(s.lambda) << "\n"
    << "warmup_epochs = " << s.warmup_epochs << "\n"
    << "plastic_layer_count = " << s.plastic_layer_count << "\n"
    << "plastic_retain = " << format_double(s.plastic_retain) << "\n"
    << "plastic_noise_param = " << format_double(s.plastic_noise_param) << "\n"
    << "plastic_noise_is_std = " << b(s.plastic_noise_is_std) << "\n"
    << "revert_tolerance = " << format_double(s.revert_tolerance) << "\n"
    << "revert_patience = " << s.revert_patience << "\n"
    << "reset_optimizer_on_plastic = " << b(s.reset_optimizer_on_plastic) << "\n";
  if (cfg.accuracy_condition) o << "accuracy_condition = " << b(*cfg.accuracy_condition) << "\n";
  return o.str();
}

}  // namespace sal
