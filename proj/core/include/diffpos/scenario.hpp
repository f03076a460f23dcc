#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "diffpos/estimators.hpp"
#include "diffpos/geometry.hpp"
#include "diffpos/vec3.hpp"

namespace diffpos {

enum class RunMode { kPebMap, kEstimatorMc, kPowerRatioSweep };

std::string_view to_string(RunMode mode);
/// Accepts "peb_map", "estimator_mc", "power_ratio_sweep". Throws Error(kConfig).
RunMode run_mode_from_string(std::string_view text);

struct PowerRatioSettings {
  std::vector<double> theta_deg;  ///< sweep grid, each in (0, 90]
  double anchor_standoff = 20.0;  ///< |y_a|, meters
  /// Sampled nodes have y_n in [min_depth_factor * window height,
  /// max_depth]; x_n and z_n come from the building box.
  double min_depth_factor = 10.0;
  double max_depth = 100.0;  ///< meters
  double frequency_hz = 28e9;
};

struct EstimatorSettings {
  /// Model-matched straight-line ranges (isolates the LLS model mismatch).
  bool euclidean_ranges = false;
  int max_iterations = 200;
  int restarts = 5;
};

/// Everything a run needs. JSON round-trips through scenario_from_json /
/// to_json; schema_version guards the layout.
struct Scenario {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  RunMode mode = RunMode::kPebMap;
  estimators::Box building_box{{-10.0, 0.0, 5.0}, {10.0, 20.0, 40.0}};
  geometry::Window window;
  std::vector<Point3> anchors;
  double bandwidth_hz = 100e6;
  std::vector<double> snr_db_list;
  std::size_t n_samples = 10'000;
  std::uint64_t seed = 1;
  geometry::EdgeKind edge_kind = geometry::EdgeKind::kUpper;
  PowerRatioSettings power_ratio;
  EstimatorSettings estimator;

  /// Throws Error(kConfig) naming the first violated constraint.
  void validate() const;
};

/// Simulation parameters of the reference outdoor-to-indoor study: three
/// anchors, 20 m window span, 2 m window height, 100 MHz, 3..15 dB.
Scenario reference_scenario();

Scenario scenario_from_json(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);
std::string to_json(const Scenario& scenario, int indent = 2);

}  // namespace diffpos
