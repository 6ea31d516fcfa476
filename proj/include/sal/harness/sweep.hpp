#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sal/harness/config.hpp"
#include "sal/harness/run.hpp"

namespace sal {

/// Config for seed `k` of a sweep: seed offset by k, name suffixed.
inline RunConfig seeded_config(const RunConfig& base, int k) {
  RunConfig c = base;
  c.seed = base.seed + static_cast<std::uint64_t>(k);
  c.name = base.name + "_seed" + std::to_string(k);
  return c;
}

/// Runs `seeds` independent seeds on up to `workers` threads. Results are
/// ordered by seed index regardless of scheduling.
inline std::vector<RunArtifact> run_seeds(const RunConfig& base, int seeds, unsigned workers = 0) {
  if (seeds < 1) throw ConfigError("sweep: need at least one seed");
  if (workers == 0) workers = std::max(1U, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(seeds));
  std::vector<RunArtifact> out(static_cast<std::size_t>(seeds));
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int k = next++; k < seeds; k = next++) {
      try {
        out[static_cast<std::size_t>(k)] = train_run(seeded_config(base, k));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (unsigned i = 0; i < workers; ++i) pool.emplace_back(worker);
  pool.clear();
  if (failure) std::rethrow_exception(failure);
  return out;
}

inline RunConfig baseline_of(const RunConfig& cfg) {
  RunConfig c = cfg;
  c.sal_enabled = false;
  return c;
}

/// Writes each artifact to `dir`/seed_k.
inline void write_sweep(const std::vector<RunArtifact>& runs, const std::filesystem::path& dir) {
  for (std::size_t k = 0; k < runs.size(); ++k) {
    write_run_dir(runs[k], dir / ("seed_" + std::to_string(k)));
  }
}

}  // namespace sal
