#include "diffpos/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "diffpos/errors.hpp"
#include "diffpos/fisher.hpp"
#include "diffpos/gtd.hpp"
#include "diffpos/version.hpp"

namespace diffpos::sim {

namespace {

constexpr std::uint64_t kNoiseStreamBase = 1;

double to_db(double ratio) { return 10.0 * std::log10(ratio); }

std::int64_t as_int(std::size_t v) { return static_cast<std::int64_t>(v); }

Cell optional_cell(const std::optional<double>& v) {
  return v ? Cell{*v} : Cell{};
}

fisher::RangingModel model_for(const Scenario& s, double snr_db) {
  return fisher::RangingModel::uniform(s.bandwidth_hz, fisher::db_to_linear(snr_db), s.anchors.size());
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double sum = 0.0;
  for (double x : v) sum += x;
  return sum / static_cast<double>(v.size());
}

double rms(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum / static_cast<double>(v.size()));
}

void add_cdf_rows(ResultTable& table, const std::vector<Cell>& prefix, const std::vector<double>& values) {
  const std::vector<double> grid = percentile_grid(values);
  for (std::size_t p = 0; p < grid.size(); ++p) {
    std::vector<Cell> row = prefix;
    row.emplace_back(as_int(p));
    row.emplace_back(grid[p]);
    table.add_row(std::move(row));
  }
}

unsigned worker_count(const RunOptions& options) {
  if (options.threads > 0) return options.threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string status_of(const Error& e) { return std::string(to_string(e.code())); }

// ---------------------------------------------------------------- PEB map

struct PebCell {
  std::string verdict;  // "ok", "rank_deficient" or an error code
  int rank = 0;
  std::optional<double> peb_3d;
  std::optional<double> peb_z;
  bool ill_conditioned = false;
};

struct PebSample {
  Point3 node;
  std::vector<PebCell> per_snr;
};

// ------------------------------------------------------------ Monte Carlo

struct EstimatorOutcome {
  std::string status;  // "ok", "not_converged" or an error code
  bool has_estimate = false;
  bool converged = false;
  int iterations = 0;
  double error_3d = 0.0;
  double error_z = 0.0;
};

struct McCell {
  std::optional<double> peb_3d;
  std::optional<double> peb_z;
  std::string synth_status = "ok";
  EstimatorOutcome nls;
  EstimatorOutcome lls;
};

struct McSample {
  Point3 node;
  std::vector<McCell> per_snr;
};

EstimatorOutcome score(const estimators::PositionEstimate& est, const Point3& truth) {
  EstimatorOutcome out;
  out.has_estimate = true;
  out.converged = est.converged;
  out.iterations = est.iterations;
  out.status = est.converged ? "ok" : "not_converged";
  out.error_3d = distance(est.alpha_hat, truth);
  out.error_z = std::abs(est.alpha_hat.z - truth.z);
  return out;
}

template <typename F>
EstimatorOutcome guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (!is_geometry_error(e.code())) throw;
    EstimatorOutcome out;
    out.status = status_of(e);
    return out;
  }
}

}  // namespace

const ResultTable& RunResult::table(const std::string& name) const {
  for (const auto& t : tables) {
    if (t.name() == name) return t;
  }
  throw std::out_of_range("no table named " + name);
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  pool.clear();
  if (error) std::rethrow_exception(error);
}

Point3 sample_node(const estimators::Box& box, std::uint64_t seed, std::size_t index) {
  std::mt19937_64 rng(estimators::derive_seed(seed, index));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double ux = unit(rng);
  const double uy = unit(rng);
  const double uz = unit(rng);
  return {box.lo.x + ux * (box.hi.x - box.lo.x), box.lo.y + uy * (box.hi.y - box.lo.y),
          box.lo.z + uz * (box.hi.z - box.lo.z)};
}

std::vector<double> percentile_grid(std::vector<double> values) {
  std::vector<double> out;
  if (values.empty()) return out;
  std::sort(values.begin(), values.end());
  const double last = static_cast<double>(values.size() - 1);
  out.reserve(101);
  for (int p = 0; p <= 100; ++p) {
    const double h = last * p / 100.0;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    out.push_back(values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]));
  }
  return out;
}

RunResult run_peb_map(const Scenario& scenario, const RunOptions& options) {
  scenario.validate();
  const std::size_t n = scenario.n_samples;
  const std::size_t n_snr = scenario.snr_db_list.size();
  std::vector<fisher::RangingModel> models;
  for (double snr : scenario.snr_db_list) models.push_back(model_for(scenario, snr));

  std::vector<PebSample> samples(n);
  parallel_for(n, worker_count(options), [&](std::size_t i) {
    PebSample& s = samples[i];
    s.node = sample_node(scenario.building_box, scenario.seed, i);
    s.per_snr.resize(n_snr);
    for (std::size_t k = 0; k < n_snr; ++k) {
      PebCell& c = s.per_snr[k];
      try {
        const fisher::FisherReport r =
            fisher::build_fim(scenario.anchors, s.node, scenario.window, models[k], scenario.edge_kind);
        c.rank = r.rank;
        c.verdict = r.identifiable() ? "ok" : "rank_deficient";
        c.peb_3d = r.peb_3d;
        c.peb_z = r.peb_z;
        c.ill_conditioned = r.ill_conditioned;
      } catch (const Error& e) {
        if (!is_geometry_error(e.code())) throw;
        c.verdict = status_of(e);
      }
    }
  });

  RunResult result;
  result.mode = RunMode::kPebMap;
  ResultTable rows("peb_samples", {"sample", "x", "y", "z", "snr_db", "rank", "verdict", "peb_3d", "peb_z",
                                   "ill_conditioned"});
  for (std::size_t i = 0; i < n; ++i) {
    const PebSample& s = samples[i];
    for (std::size_t k = 0; k < n_snr; ++k) {
      const PebCell& c = s.per_snr[k];
      rows.add_row({as_int(i), s.node.x, s.node.y, s.node.z, scenario.snr_db_list[k],
                    std::int64_t{c.rank}, c.verdict, optional_cell(c.peb_3d), optional_cell(c.peb_z),
                    std::int64_t{c.ill_conditioned ? 1 : 0}});
    }
  }

  ResultTable cdf("peb_cdf", {"snr_db", "metric", "percentile", "value"});
  ResultTable summary("peb_summary", {"snr_db", "n_samples", "n_valid", "n_rank_deficient",
                                      "n_geometry_error", "n_ill_conditioned", "mean_peb_3d",
                                      "mean_peb_z", "median_peb_3d", "median_peb_z"});
  for (std::size_t k = 0; k < n_snr; ++k) {
    std::vector<double> p3, pz;
    std::size_t rank_deficient = 0, geometry_error = 0, ill = 0;
    for (const PebSample& s : samples) {
      const PebCell& c = s.per_snr[k];
      if (c.peb_3d) {
        p3.push_back(*c.peb_3d);
        pz.push_back(*c.peb_z);
        if (c.ill_conditioned) ++ill;
      } else if (c.verdict == "rank_deficient") {
        ++rank_deficient;
      } else {
        ++geometry_error;
      }
    }
    const double snr = scenario.snr_db_list[k];
    add_cdf_rows(cdf, {snr, std::string("peb_3d")}, p3);
    add_cdf_rows(cdf, {snr, std::string("peb_z")}, pz);
    const auto g3 = percentile_grid(p3);
    const auto gz = percentile_grid(pz);
    summary.add_row({snr, as_int(n), as_int(p3.size()), as_int(rank_deficient), as_int(geometry_error),
                     as_int(ill), mean(p3), mean(pz), g3.empty() ? Cell{} : Cell{g3[50]},
                     gz.empty() ? Cell{} : Cell{gz[50]}});
  }
  result.tables.push_back(std::move(rows));
  result.tables.push_back(std::move(cdf));
  result.tables.push_back(std::move(summary));
  return result;
}

RunResult run_estimator_mc(const Scenario& scenario, const RunOptions& options) {
  scenario.validate();
  if (scenario.anchors.size() < 3) {
    throw Error(ErrorCode::kConfig, "estimator_mc needs at least three anchors");
  }
  const std::size_t n = scenario.n_samples;
  const std::size_t n_snr = scenario.snr_db_list.size();
  std::vector<fisher::RangingModel> models;
  for (double snr : scenario.snr_db_list) models.push_back(model_for(scenario, snr));

  estimators::NlsOptions nls_options;
  nls_options.search_box = scenario.building_box;
  nls_options.kind = scenario.edge_kind;
  nls_options.max_iterations = scenario.estimator.max_iterations;
  nls_options.restarts = scenario.estimator.restarts;
  estimators::SynthesisOptions synth;
  synth.euclidean = scenario.estimator.euclidean_ranges;
  synth.kind = scenario.edge_kind;
  const Point3 init = scenario.building_box.center();

  std::vector<McSample> samples(n);
  parallel_for(n, worker_count(options), [&](std::size_t i) {
    McSample& s = samples[i];
    s.node = sample_node(scenario.building_box, scenario.seed, i);
    s.per_snr.resize(n_snr);
    const std::uint64_t node_seed = estimators::derive_seed(scenario.seed, i);
    for (std::size_t k = 0; k < n_snr; ++k) {
      McCell& c = s.per_snr[k];
      try {
        const fisher::FisherReport r =
            fisher::build_fim(scenario.anchors, s.node, scenario.window, models[k], scenario.edge_kind);
        c.peb_3d = r.peb_3d;
        c.peb_z = r.peb_z;
      } catch (const Error& e) {
        if (!is_geometry_error(e.code())) throw;
      }
      estimators::RangeMeasurementSet meas;
      try {
        meas = estimators::synthesize_ranges(s.node, scenario.anchors, scenario.window, models[k],
                                             estimators::derive_seed(node_seed, kNoiseStreamBase + k), synth);
      } catch (const Error& e) {
        if (!is_geometry_error(e.code())) throw;
        c.synth_status = status_of(e);
        c.nls.status = c.synth_status;
        c.lls.status = c.synth_status;
        continue;
      }
      c.nls = guarded([&] {
        return score(estimators::estimate_diffraction_nls(meas, scenario.window, init, nls_options), s.node);
      });
      c.lls = guarded([&] { return score(estimators::estimate_lls_baseline(meas), s.node); });
    }
  });

  RunResult result;
  result.mode = RunMode::kEstimatorMc;
  ResultTable rows("mc_trials", {"sample", "x", "y", "z", "snr_db", "estimator", "status", "iterations",
                                 "error_3d", "error_z", "peb_3d", "peb_z"});
  auto outcome_row = [&](std::size_t i, const McSample& s, std::size_t k, const char* name,
                         const EstimatorOutcome& o) {
    const McCell& c = s.per_snr[k];
    rows.add_row({as_int(i), s.node.x, s.node.y, s.node.z, scenario.snr_db_list[k], std::string(name),
                  o.status, std::int64_t{o.iterations}, o.has_estimate ? Cell{o.error_3d} : Cell{},
                  o.has_estimate ? Cell{o.error_z} : Cell{}, optional_cell(c.peb_3d), optional_cell(c.peb_z)});
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n_snr; ++k) {
      outcome_row(i, samples[i], k, "nls", samples[i].per_snr[k].nls);
      outcome_row(i, samples[i], k, "lls", samples[i].per_snr[k].lls);
    }
  }

  ResultTable cdf("mc_cdf", {"snr_db", "estimator", "metric", "percentile", "value"});
  ResultTable summary("mc_summary", {"snr_db", "estimator", "n_trials", "n_scored", "n_failed",
                                     "n_not_converged", "rmse_3d", "rmse_z", "mean_peb_3d", "mean_peb_z",
                                     "rmse_over_mean_peb"});
  for (std::size_t k = 0; k < n_snr; ++k) {
    const double snr = scenario.snr_db_list[k];
    // Scored trials: nodes with a finite bound where both estimators returned
    // an estimate, so the two CDFs cover the same node set.
    std::vector<double> e3[2], ez[2], p3, pz;
    std::size_t failed[2] = {0, 0}, not_converged[2] = {0, 0};
    for (const McSample& s : samples) {
      const McCell& c = s.per_snr[k];
      const EstimatorOutcome* o[2] = {&c.nls, &c.lls};
      for (int e = 0; e < 2; ++e) {
        if (!o[e]->has_estimate) ++failed[e];
        else if (!o[e]->converged) ++not_converged[e];
      }
      if (!c.peb_3d || !c.nls.has_estimate || !c.lls.has_estimate) continue;
      p3.push_back(*c.peb_3d);
      pz.push_back(*c.peb_z);
      for (int e = 0; e < 2; ++e) {
        e3[e].push_back(o[e]->error_3d);
        ez[e].push_back(o[e]->error_z);
      }
    }
    const char* names[2] = {"nls", "lls"};
    for (int e = 0; e < 2; ++e) {
      add_cdf_rows(cdf, {snr, std::string(names[e]), std::string("error_3d")}, e3[e]);
      add_cdf_rows(cdf, {snr, std::string(names[e]), std::string("error_z")}, ez[e]);
      const double r3 = rms(e3[e]);
      summary.add_row({snr, std::string(names[e]), as_int(n), as_int(e3[e].size()), as_int(failed[e]),
                       as_int(not_converged[e]), r3, rms(ez[e]), mean(p3), mean(pz), r3 / mean(p3)});
    }
  }
  result.tables.push_back(std::move(rows));
  result.tables.push_back(std::move(cdf));
  result.tables.push_back(std::move(summary));
  return result;
}

RunResult run_power_ratio_sweep(const Scenario& scenario, const RunOptions& options) {
  scenario.validate();
  const PowerRatioSettings& pr = scenario.power_ratio;
  if (pr.theta_deg.empty()) throw Error(ErrorCode::kConfig, "power_ratio.theta_deg is empty");
  const double k = gtd::wavenumber(pr.frequency_hz);
  estimators::Box box = scenario.building_box;
  box.lo.y = pr.min_depth_factor * scenario.window.height;
  box.hi.y = pr.max_depth;

  struct RatioCell {
    Point3 anchor;
    double theta_check = 0.0;
    std::optional<double> exact_db;
    std::string status = "ok";
  };
  const std::size_t n = scenario.n_samples;
  const std::size_t n_theta = pr.theta_deg.size();
  std::vector<Point3> nodes(n);
  std::vector<std::vector<RatioCell>> cells(n, std::vector<RatioCell>(n_theta));

  parallel_for(n, worker_count(options), [&](std::size_t i) {
    nodes[i] = sample_node(box, scenario.seed, i);
    const Point3& node = nodes[i];
    const double z_lower =
        geometry::window_edge_height(node, scenario.window, geometry::EdgeKind::kLower);
    for (std::size_t t = 0; t < n_theta; ++t) {
      RatioCell& c = cells[i][t];
      const double theta = pr.theta_deg[t] * kPi / 180.0;
      // Anchor in the node's x-plane, below the lower edge by |y_a| cot(theta).
      const double rise = pr.theta_deg[t] == 90.0 ? 0.0 : pr.anchor_standoff / std::tan(theta);
      c.anchor = {node.x, -pr.anchor_standoff, z_lower - rise};
      c.theta_check = gtd::elevation_angle(c.anchor, node, scenario.window) * 180.0 / kPi;
      try {
        c.exact_db = to_db(gtd::exact_power_ratio(c.anchor, node, scenario.window, gtd::kXPolarized, k));
      } catch (const Error& e) {
        if (!is_geometry_error(e.code())) throw;
        c.status = status_of(e);
      }
    }
  });

  RunResult result;
  result.mode = RunMode::kPowerRatioSweep;
  ResultTable rows("ratio_samples", {"sample", "x", "y", "z", "theta_deg", "anchor_z", "approx_db", "exact_db",
                                     "diff_db", "status"});
  ResultTable summary("ratio_summary", {"theta_deg", "approx_db", "n_valid", "exact_mean_db", "exact_min_db",
                                        "exact_max_db", "max_abs_diff_db"});
  for (std::size_t t = 0; t < n_theta; ++t) {
    const double approx_db = to_db(gtd::power_ratio(pr.theta_deg[t] * kPi / 180.0));
    std::vector<double> exact;
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const RatioCell& c = cells[i][t];
      Cell diff;
      if (c.exact_db) {
        exact.push_back(*c.exact_db);
        worst = std::max(worst, std::abs(*c.exact_db - approx_db));
        diff = *c.exact_db - approx_db;
      }
      rows.add_row({as_int(i), nodes[i].x, nodes[i].y, nodes[i].z, pr.theta_deg[t], c.anchor.z, approx_db,
                    optional_cell(c.exact_db), diff, c.status});
    }
    const bool any = !exact.empty();
    summary.add_row({pr.theta_deg[t], approx_db, as_int(exact.size()), any ? Cell{mean(exact)} : Cell{},
                     any ? Cell{*std::min_element(exact.begin(), exact.end())} : Cell{},
                     any ? Cell{*std::max_element(exact.begin(), exact.end())} : Cell{},
                     any ? Cell{worst} : Cell{}});
  }
  result.tables.push_back(std::move(rows));
  result.tables.push_back(std::move(summary));
  return result;
}

RunResult run(const Scenario& scenario, const RunOptions& options) {
  switch (scenario.mode) {
    case RunMode::kPebMap:
      return run_peb_map(scenario, options);
    case RunMode::kEstimatorMc:
      return run_estimator_mc(scenario, options);
    case RunMode::kPowerRatioSweep:
      return run_power_ratio_sweep(scenario, options);
  }
  throw Error(ErrorCode::kConfig, "unknown run mode");
}

std::vector<std::filesystem::path> write_run(const RunResult& result, const Scenario& scenario,
                                             const std::filesystem::path& dir, double wall_time_s) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::filesystem::path> written;
  nlohmann::json outputs = nlohmann::json::array();
  for (const ResultTable& t : result.tables) {
    const auto path = dir / (t.name() + ".csv");
    t.write_csv(path);
    written.push_back(path);
    outputs.push_back({{"file", path.filename().string()}, {"rows", t.size()}, {"columns", t.columns()}});
  }

  nlohmann::json manifest;
  manifest["tool"] = "diffpos";
  manifest["version"] = kVersion;
  manifest["mode"] = std::string(to_string(result.mode));
  manifest["seed"] = scenario.seed;
  manifest["wall_time_s"] = wall_time_s;
  manifest["scenario"] = nlohmann::json::parse(to_json(scenario));
  manifest["outputs"] = outputs;

  const auto path = dir / "manifest.json";
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out << manifest.dump(2) << '\n';
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
  written.push_back(path);
  return written;
}

}  // namespace diffpos::sim
