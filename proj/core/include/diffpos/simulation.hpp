#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "diffpos/estimators.hpp"
#include "diffpos/result_table.hpp"
#include "diffpos/scenario.hpp"

/// Scenario-driven sweeps: PEB maps, estimator Monte Carlo and the
/// upper/lower power-ratio sweep.
namespace diffpos::sim {

struct RunOptions {
  /// Worker threads; 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;
};

struct RunResult {
  RunMode mode = RunMode::kPebMap;
  std::vector<ResultTable> tables;

  /// Throws std::out_of_range for an unknown table name.
  const ResultTable& table(const std::string& name) const;
};

/// Calls fn(i) for i in [0, n) on a pool of workers. The first exception
/// thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

/// Node i of a run: uniform in the box, drawn from its own stream so any
/// sample can be regenerated on its own.
Point3 sample_node(const estimators::Box& box, std::uint64_t seed, std::size_t index);

/// Type-7 (linear interpolation) quantiles of `values` at percentiles
/// 0, 1, ..., 100. Empty input gives an empty result.
std::vector<double> percentile_grid(std::vector<double> values);

RunResult run_peb_map(const Scenario& scenario, const RunOptions& options = {});
RunResult run_estimator_mc(const Scenario& scenario, const RunOptions& options = {});
RunResult run_power_ratio_sweep(const Scenario& scenario, const RunOptions& options = {});

/// Dispatches on scenario.mode.
RunResult run(const Scenario& scenario, const RunOptions& options = {});

/// Writes one CSV per table plus manifest.json into `dir` (created if
/// missing). Returns the written paths. Throws Error(kIo).
std::vector<std::filesystem::path> write_run(const RunResult& result, const Scenario& scenario,
                                             const std::filesystem::path& dir,
                                             double wall_time_s);

}  // namespace diffpos::sim
