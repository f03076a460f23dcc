#include "diffpos/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "diffpos/errors.hpp"

namespace diffpos {

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::kConfig, msg); }

Point3 point_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) config_error(what + " must be an array of three numbers");
  for (const auto& v : j) {
    if (!v.is_number()) config_error(what + " must contain numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json point_to(const Point3& p) { return json::array({p.x, p.y, p.z}); }

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!known.count(key)) config_error("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    config_error(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::vector<double> doubles_from(const json& j, const std::string& what) {
  if (!j.is_array()) config_error(what + " must be an array");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) config_error(what + " must contain numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

geometry::EdgeKind edge_from(const std::string& s) {
  if (s == "upper") return geometry::EdgeKind::kUpper;
  if (s == "lower") return geometry::EdgeKind::kLower;
  config_error("edge must be 'upper' or 'lower', got '" + s + "'");
}

}  // namespace

std::string_view to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kPebMap:
      return "peb_map";
    case RunMode::kEstimatorMc:
      return "estimator_mc";
    case RunMode::kPowerRatioSweep:
      return "power_ratio_sweep";
  }
  return "unknown";
}

RunMode run_mode_from_string(std::string_view text) {
  if (text == "peb_map") return RunMode::kPebMap;
  if (text == "estimator_mc") return RunMode::kEstimatorMc;
  if (text == "power_ratio_sweep") return RunMode::kPowerRatioSweep;
  config_error("unknown mode '" + std::string(text) + "'");
}

void Scenario::validate() const {
  if (schema_version != kSchemaVersion) {
    config_error("unsupported schema_version " + std::to_string(schema_version));
  }
  const Point3& lo = building_box.lo;
  const Point3& hi = building_box.hi;
  if (!is_finite(lo) || !is_finite(hi) || lo.x > hi.x || lo.y > hi.y || lo.z > hi.z) {
    config_error("building_box corners must be finite and ordered (min <= max)");
  }
  if (lo.y < 0.0) config_error("building_box must lie inside the building (y >= 0)");
  if (!(window.height > 0.0)) config_error("window height must be positive");
  if (!(window.x1 < window.x2)) config_error("window span requires x1 < x2");
  if (anchors.empty()) config_error("at least one anchor is required");
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (!is_finite(anchors[i]) || !(anchors[i].y < 0.0)) {
      config_error("anchor " + std::to_string(i) + " must be finite and outside the building (y < 0)");
    }
  }
  if (!(bandwidth_hz > 0.0) || !std::isfinite(bandwidth_hz)) config_error("bandwidth_hz must be positive");
  if (snr_db_list.empty()) config_error("snr_db must list at least one value");
  for (double s : snr_db_list) {
    if (!std::isfinite(s)) config_error("snr_db values must be finite");
  }
  if (n_samples < 1) config_error("n_samples must be at least 1");
  for (double t : power_ratio.theta_deg) {
    if (!(t > 0.0 && t <= 90.0)) config_error("theta_deg values must lie in (0, 90]");
  }
  if (!(power_ratio.anchor_standoff > 0.0)) config_error("anchor_standoff_m must be positive");
  if (!(power_ratio.min_depth_factor >= 0.0)) config_error("min_depth_factor must be non-negative");
  if (!(power_ratio.frequency_hz > 0.0)) config_error("frequency_hz must be positive");
  if (!(power_ratio.max_depth > power_ratio.min_depth_factor * window.height)) {
    config_error("max_depth_m must exceed min_depth_factor * window height");
  }
  if (estimator.max_iterations < 1) config_error("max_iterations must be at least 1");
  if (estimator.restarts < 0) config_error("restarts must be non-negative");
}

Scenario reference_scenario() {
  Scenario s;
  s.anchors = {{-10.0, -20.0, -10.0}, {0.0, -7.0, -20.0}, {10.0, -20.0, -10.0}};
  s.snr_db_list = {3.0, 6.0, 9.0, 12.0, 15.0};
  for (int t = 5; t <= 90; t += 5) s.power_ratio.theta_deg.push_back(t);
  return s;
}

Scenario scenario_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) config_error("scenario must be a JSON object");
  reject_unknown(j,
                 {"schema_version", "mode", "building_box", "window", "anchors", "bandwidth_hz",
                  "snr_db", "n_samples", "seed", "edge", "power_ratio", "estimator", "description"},
                 "scenario");

  Scenario s = reference_scenario();
  s.schema_version = get_or<int>(j, "schema_version", -1);
  if (s.schema_version == -1) config_error("schema_version is required");
  if (j.contains("mode")) s.mode = run_mode_from_string(get_or<std::string>(j, "mode", ""));
  if (j.contains("building_box")) {
    const json& box = j["building_box"];
    if (!box.is_object()) config_error("building_box must be an object");
    reject_unknown(box, {"min", "max"}, "building_box");
    if (!box.contains("min") || !box.contains("max")) config_error("building_box needs min and max");
    s.building_box = {point_from(box["min"], "building_box.min"), point_from(box["max"], "building_box.max")};
  }
  if (j.contains("window")) {
    const json& w = j["window"];
    if (!w.is_object()) config_error("window must be an object");
    reject_unknown(w, {"height", "x1", "x2"}, "window");
    s.window.height = get_or(w, "height", s.window.height);
    s.window.x1 = get_or(w, "x1", s.window.x1);
    s.window.x2 = get_or(w, "x2", s.window.x2);
  }
  if (j.contains("anchors")) {
    if (!j["anchors"].is_array()) config_error("anchors must be an array");
    s.anchors.clear();
    for (const auto& a : j["anchors"]) s.anchors.push_back(point_from(a, "anchor"));
  }
  s.bandwidth_hz = get_or(j, "bandwidth_hz", s.bandwidth_hz);
  if (j.contains("snr_db")) s.snr_db_list = doubles_from(j["snr_db"], "snr_db");
  if (j.contains("n_samples")) {
    const auto n = get_or<std::int64_t>(j, "n_samples", 0);
    if (n < 1) config_error("n_samples must be at least 1");
    s.n_samples = static_cast<std::size_t>(n);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) config_error("seed must be a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("edge")) s.edge_kind = edge_from(get_or<std::string>(j, "edge", ""));
  if (j.contains("power_ratio")) {
    const json& p = j["power_ratio"];
    if (!p.is_object()) config_error("power_ratio must be an object");
    reject_unknown(p, {"theta_deg", "anchor_standoff_m", "min_depth_factor", "max_depth_m", "frequency_hz"},
                   "power_ratio");
    if (p.contains("theta_deg")) s.power_ratio.theta_deg = doubles_from(p["theta_deg"], "theta_deg");
    s.power_ratio.anchor_standoff = get_or(p, "anchor_standoff_m", s.power_ratio.anchor_standoff);
    s.power_ratio.min_depth_factor = get_or(p, "min_depth_factor", s.power_ratio.min_depth_factor);
    s.power_ratio.max_depth = get_or(p, "max_depth_m", s.power_ratio.max_depth);
    s.power_ratio.frequency_hz = get_or(p, "frequency_hz", s.power_ratio.frequency_hz);
  }
  if (j.contains("estimator")) {
    const json& e = j["estimator"];
    if (!e.is_object()) config_error("estimator must be an object");
    reject_unknown(e, {"euclidean_ranges", "max_iterations", "restarts"}, "estimator");
    s.estimator.euclidean_ranges = get_or(e, "euclidean_ranges", s.estimator.euclidean_ranges);
    s.estimator.max_iterations = get_or(e, "max_iterations", s.estimator.max_iterations);
    s.estimator.restarts = get_or(e, "restarts", s.estimator.restarts);
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open scenario file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

std::string to_json(const Scenario& s, int indent) {
  json j;
  j["schema_version"] = s.schema_version;
  j["mode"] = std::string(to_string(s.mode));
  j["building_box"] = {{"min", point_to(s.building_box.lo)}, {"max", point_to(s.building_box.hi)}};
  j["window"] = {{"height", s.window.height}, {"x1", s.window.x1}, {"x2", s.window.x2}};
  j["anchors"] = json::array();
  for (const auto& a : s.anchors) j["anchors"].push_back(point_to(a));
  j["bandwidth_hz"] = s.bandwidth_hz;
  j["snr_db"] = s.snr_db_list;
  j["n_samples"] = s.n_samples;
  j["seed"] = s.seed;
  j["edge"] = geometry::to_string(s.edge_kind);
  j["power_ratio"] = {{"theta_deg", s.power_ratio.theta_deg},
                      {"anchor_standoff_m", s.power_ratio.anchor_standoff},
                      {"min_depth_factor", s.power_ratio.min_depth_factor},
                      {"max_depth_m", s.power_ratio.max_depth},
                      {"frequency_hz", s.power_ratio.frequency_hz}};
  j["estimator"] = {{"euclidean_ranges", s.estimator.euclidean_ranges},
                    {"max_iterations", s.estimator.max_iterations},
                    {"restarts", s.estimator.restarts}};
  return j.dump(indent);
}

}  // namespace diffpos
