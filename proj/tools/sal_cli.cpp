#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "sal/sal.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    sal::write_text(out_path, text);
    std::cout << "wrote " << out_path << "\n";
  }
}

fs::path output_dir_for(const sal::RunConfig& cfg, const std::string& flag) {
  if (!flag.empty()) return flag;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return fs::path("runs") / cfg.name;
}

int cmd_train(const std::string& config_path, const std::string& out, const std::optional<std::uint64_t>& seed) {
  auto cfg = sal::load_run_config(config_path);
  if (seed) cfg.seed = *seed;
  const auto art = sal::train_run(cfg);
  const auto dir = output_dir_for(cfg, out);
  sal::write_run_dir(art, dir);
  std::cout << "run " << cfg.name << " (" << art.status << "): " << art.rows.size() << " epochs, "
            << art.count(sal::InterventionKind::Noise) << " noise, "
            << art.count(sal::InterventionKind::Plastic) << " plastic, "
            << art.count(sal::InterventionKind::Revert) << " revert -> " << dir.string() << "\n";
  if (!art.message.empty()) std::cout << art.message << "\n";
  for (const auto& w : art.warnings) std::cerr << "warning: " << w << "\n";
  return art.status == "ok" ? kOk : kFailed;
}

int cmd_compare(const std::string& a, const std::string& b, const std::string& out) {
  const auto dirs_a = sal::run_dirs_in(a);
  const auto dirs_b = sal::run_dirs_in(b);
  if (dirs_a.size() == 1 && dirs_b.size() == 1 && dirs_a.front() == fs::path(a) &&
      dirs_b.front() == fs::path(b)) {
    const auto rep = sal::compare_runs(sal::load_run_dir(a), sal::load_run_dir(b));
    std::cout << sal::comparison_text(rep);
    if (!out.empty()) {
      fs::create_directories(out);
      sal::write_text(fs::path(out) / "comparison.csv", sal::comparison_csv(rep));
      sal::write_text(fs::path(out) / "comparison.txt", sal::comparison_text(rep));
    }
    return kOk;
  }
  std::vector<sal::RunArtifact> arm_a, arm_b;
  for (const auto& d : dirs_a) arm_a.push_back(sal::load_run_dir(d));
  for (const auto& d : dirs_b) arm_b.push_back(sal::load_run_dir(d));
  const auto rep = sal::compare_ensembles(arm_a, arm_b);
  std::cout << sal::ensemble_text(rep);
  if (!out.empty()) {
    fs::create_directories(out);
    sal::write_text(fs::path(out) / "ensemble.csv", sal::ensemble_csv(rep));
    sal::write_text(fs::path(out) / "ensemble.txt", sal::ensemble_text(rep));
  }
  return kOk;
}

int cmd_verify_theory(std::uint64_t seed) {
  const auto checks = sal::run_theory_checks(seed);
  std::cout << sal::theory_table(checks);
  for (const auto& c : checks) {
    if (!c.passed) return kFailed;
  }
  return kOk;
}

int cmd_surface(const std::string& ckpt, const std::string& config_path, double range, int steps,
                std::uint64_t seed, const std::string& out) {
  const auto cfg = sal::load_run_config(config_path);
  const auto task = sal::make_task(cfg);
  const auto params = sal::io::load_checkpoint(ckpt);
  params.require_same_layout(task->initial_parameters(cfg.seed), "surface: checkpoint does not fit the task");
  const auto center = params.flatten();
  const auto grid = sal::analysis::surface_grid(task->loss_fn(params), center, seed, range, steps);
  emit(sal::surface_csv(grid), out);
  return kOk;
}

int cmd_trajectory(const std::string& run_dir, std::size_t components, const std::string& out) {
  const auto art = sal::load_run_dir(run_dir);
  const auto [epochs, pca] = sal::run_trajectory(art, components);
  emit(sal::trajectory_csv(epochs, pca),
       out.empty() ? (fs::path(run_dir) / "trajectory.csv").string() : out);
  return kOk;
}

int cmd_histogram(const std::string& run_dir, std::size_t bins, const std::string& out) {
  const auto art = sal::load_run_dir(run_dir);
  emit(sal::histogram_csv(sal::run_stress_histogram(art, bins)), out);
  return kOk;
}

int cmd_sweep(const std::string& config_path, int seeds, const std::string& out, bool both_arms,
              unsigned workers) {
  const auto cfg = sal::load_run_config(config_path);
  const auto dir = output_dir_for(cfg, out);
  const auto runs = sal::run_seeds(cfg, seeds, workers);
  if (!both_arms) {
    sal::write_sweep(runs, dir);
    std::cout << "wrote " << runs.size() << " runs to " << dir.string() << "\n";
    return kOk;
  }
  const auto baseline = sal::run_seeds(sal::baseline_of(cfg), seeds, workers);
  sal::write_sweep(runs, dir / "sal");
  sal::write_sweep(baseline, dir / "baseline");
  const auto rep = sal::compare_ensembles(baseline, runs);
  sal::write_text(dir / "ensemble.txt", sal::ensemble_text(rep));
  sal::write_text(dir / "ensemble.csv", sal::ensemble_csv(rep));
  std::cout << sal::ensemble_text(rep);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stress-aware training harness"};
  app.require_subcommand(1);

  std::string config, out, a, b, ckpt, run_dir;
  std::optional<std::uint64_t> train_seed;
  std::uint64_t seed = 20240501;
  double range = 1.0;
  int steps = 21;
  int seeds = 20;
  std::size_t components = 3;
  std::size_t bins = 10;
  bool both_arms = false;
  unsigned workers = 0;

  auto* train = app.add_subcommand("train", "Run one training config and write its run directory");
  train->add_option("config", config, "Run config (INI)")->required();
  train->add_option("--out", out, "Output directory");
  train->add_option("--seed", train_seed, "Override the config seed");

  auto* compare = app.add_subcommand("compare", "Compare a baseline run (or seed_* set) with a SAL run");
  compare->add_option("baseline", a, "Baseline run directory")->required();
  compare->add_option("sal", b, "SAL run directory")->required();
  compare->add_option("--out", out, "Directory for CSV and text reports");

  auto* verify = app.add_subcommand("verify-theory", "Check expected-loss and trace fixtures");
  verify->add_option("--seed", seed, "Master seed for the Monte Carlo draws");

  auto* surface = app.add_subcommand("surface", "Loss surface around a checkpoint");
  surface->add_option("checkpoint", ckpt, "Checkpoint (.salckpt)")->required();
  surface->add_option("config", config, "Run config describing the task")->required();
  surface->add_option("--range", range, "Half-width of each axis");
  surface->add_option("--steps", steps, "Grid points per axis (odd)");
  surface->add_option("--seed", seed, "Seed for the random directions");
  surface->add_option("--out", out, "Output CSV (stdout when omitted)");

  auto* trajectory = app.add_subcommand("trajectory", "PCA projection of a run's weight snapshots");
  trajectory->add_option("run_dir", run_dir, "Run directory")->required();
  trajectory->add_option("--components", components, "Number of principal components");
  trajectory->add_option("--out", out, "Output CSV (default <run_dir>/trajectory.csv)");

  auto* histogram = app.add_subcommand("histogram", "Stress histogram of a run");
  histogram->add_option("run_dir", run_dir, "Run directory")->required();
  histogram->add_option("--bins", bins, "Bin count");
  histogram->add_option("--out", out, "Output CSV (stdout when omitted)");

  auto* sweep = app.add_subcommand("sweep", "Run a config over consecutive seeds");
  sweep->add_option("config", config, "Run config (INI)")->required();
  sweep->add_option("--seeds", seeds, "Number of seeds")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out, "Output directory");
  sweep->add_flag("--both-arms", both_arms, "Also run the baseline arm and compare");
  sweep->add_option("--workers", workers, "Worker threads (default: hardware concurrency)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*train) return cmd_train(config, out, train_seed);
    if (*compare) return cmd_compare(a, b, out);
    if (*verify) return cmd_verify_theory(seed);
    if (*surface) return cmd_surface(ckpt, config, range, steps, seed, out);
    if (*trajectory) return cmd_trajectory(run_dir, components, out);
    if (*histogram) return cmd_histogram(run_dir, bins, out);
    if (*sweep) return cmd_sweep(config, seeds, out, both_arms, workers);
  } catch (const sal::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const sal::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const sal::ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kUsage;
}
