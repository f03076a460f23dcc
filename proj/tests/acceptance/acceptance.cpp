// Acceptance run: one PASS/FAIL line per criterion.
//
//   diffpos_acceptance [--only N] [--cli path/to/diffpos] [--workdir dir]
//
// Exit status is 0 only when every selected criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "diffpos/errors.hpp"
#include "diffpos/estimators.hpp"
#include "diffpos/fisher.hpp"
#include "diffpos/geometry.hpp"
#include "diffpos/gtd.hpp"
#include "diffpos/oracles.hpp"
#include "diffpos/scenario.hpp"
#include "diffpos/simulation.hpp"

namespace fs = std::filesystem;
using namespace diffpos;

namespace {

constexpr std::uint64_t kSeed = 20240601;

struct Options {
  int only = 0;
  std::string cli;
  fs::path workdir = fs::temp_directory_path() / "diffpos_acceptance";
};

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double num(const std::vector<Cell>& row, std::size_t col) { return std::get<double>(row[col]); }

// Values of `metric` at percentiles 0..100 for one CDF block.
std::vector<double> cdf_values(const ResultTable& cdf, const std::vector<std::pair<std::string, Cell>>& match) {
  std::vector<double> out;
  const auto cv = cdf.column_index("value");
  for (const auto& row : cdf.rows()) {
    bool hit = true;
    for (const auto& [col, want] : match) hit = hit && row[cdf.column_index(col)] == want;
    if (hit) out.push_back(num(row, cv));
  }
  return out;
}

Outcome ac1() {
  std::mt19937_64 rng(estimators::derive_seed(kSeed, 1));
  double worst = 0.0;
  int corners = 0, mismatches = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = oracles::random_edge_scene(rng);
    const auto ref = oracles::golden_section_path(s.anchor, s.node, s.edge);
    try {
      const auto sol = geometry::solve_diffraction_point(s.anchor, s.node, s.edge);
      worst = std::max(worst, std::abs(sol.path_length - ref.path_length));
      if (ref.at_endpoint) ++mismatches;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kCornerDiffraction && ref.at_endpoint) ++corners;
      else ++mismatches;
    }
  }
  return {worst <= 1e-9 && mismatches == 0,
          fmt("max |p - p_golden| %.3g m (tol 1e-9), %d shared corner verdicts, %d mismatches", worst, corners,
              mismatches)};
}

Outcome ac2() {
  std::mt19937_64 rng(estimators::derive_seed(kSeed, 2));
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const auto s = oracles::random_building_scene(rng);
    for (auto kind : {geometry::EdgeKind::kUpper, geometry::EdgeKind::kLower}) {
      const Vec3 g = fisher::path_gradient(s.anchor, s.node, s.window, kind);
      const Vec3 fd = oracles::finite_difference_gradient(s.anchor, s.node, s.window, kind);
      worst = std::max(worst, norm(g - fd) / norm(fd));
    }
  }
  return {worst <= 1e-5, fmt("max |J - J_fd| / |J_fd| %.3g over 1000 scenes x 2 edges (tol 1e-5)", worst)};
}

Outcome ac3() {
  const double r60 = gtd::power_ratio(kPi / 3);
  const double r90 = gtd::power_ratio(kPi / 2);
  const bool closed = std::abs(r60 - 3.0) <= 1e-12 && r90 == 1.0;

  Scenario s = reference_scenario();
  s.mode = RunMode::kPowerRatioSweep;
  s.seed = kSeed;
  s.n_samples = 200;
  s.power_ratio.theta_deg.clear();
  for (int t = 5; t <= 85; t += 5) s.power_ratio.theta_deg.push_back(t);
  const auto result = sim::run(s, {});
  const auto& summary = result.table("ratio_summary");
  double worst = 0.0, worst_theta = 0.0, ok_up_to = 0.0;
  bool all_valid = true;
  bool within = true;
  for (const auto& row : summary.rows()) {
    const double theta = num(row, summary.column_index("theta_deg"));
    const auto valid = std::get<std::int64_t>(row[summary.column_index("n_valid")]);
    all_valid = all_valid && valid == static_cast<std::int64_t>(s.n_samples);
    if (valid == 0) continue;
    const double d = num(row, summary.column_index("max_abs_diff_db"));
    if (d > worst) {
      worst = d;
      worst_theta = theta;
    }
    within = within && d <= 1.5;
    if (within) ok_up_to = theta;
  }
  return {closed && all_valid && worst <= 1.5,
          fmt("ratio(60) %.15g, ratio(90) %.15g; exact vs closed form max |diff| %.3g dB at theta %g "
              "(tol 1.5 dB, holds up to %g deg), y_n >= 10w, %zu nodes",
              r60, r90, worst, worst_theta, ok_up_to, s.n_samples)};
}

Outcome ac4() {
  const auto model = fisher::RangingModel::uniform(100e6, fisher::db_to_linear(10.0), 1);
  const double sigma = fisher::range_sigma(model, 0);
  return {std::abs(sigma - 0.1067) <= 1e-4, fmt("c*sqrt(CRLB) %.6f m (expect 0.1067 +- 1e-4)", sigma)};
}

Outcome ac5() {
  const Scenario tv = reference_scenario();
  const estimators::Box& box = tv.building_box;
  const geometry::Window& w = tv.window;
  auto grid = [&](int i, double lo, double hi) { return lo + (i + 0.5) * (hi - lo) / 10.0; };

  int pair_violations = 0, full_rank = 0, full_total = 0;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j)
      for (int k = 0; k < 10; ++k) {
        const Point3 node{grid(i, box.lo.x, box.hi.x), grid(j, box.lo.y, box.hi.y), grid(k, box.lo.z, box.hi.z)};
        for (std::size_t a = 0; a < 3; ++a) {
          const std::vector<Point3> two{tv.anchors[a], tv.anchors[(a + 1) % 3]};
          if (fisher::identifiability(two, node, w).rank > 2) ++pair_violations;
        }
        ++full_total;
        if (fisher::identifiability(tv.anchors, node, w).rank == 3) ++full_rank;
      }

  const std::vector<Point3> aligned{{0, -20, -10}, {0, -7, -20}, {0, -15, 0}};
  int aligned_rank2 = 0, aligned_total = 0;
  for (int j = 0; j < 10; ++j)
    for (int k = 0; k < 10; ++k) {
      const Point3 node{0.0, grid(j, box.lo.y, box.hi.y), grid(k, box.lo.z, box.hi.z)};
      ++aligned_total;
      if (fisher::identifiability(aligned, node, w).rank == 2) ++aligned_rank2;
    }
  return {pair_violations == 0 && full_rank == full_total && aligned_rank2 == aligned_total,
          fmt("two anchors rank > 2 at %d of %d node/pair cases; aligned x=0 rank 2 at %d/%d; "
              "reference geometry rank 3 at %d/%d grid nodes",
              pair_violations, 3 * full_total, aligned_rank2, aligned_total, full_rank, full_total)};
}

Outcome ac6() {
  Scenario s = reference_scenario();
  s.seed = kSeed;
  s.n_samples = 10'000;

  s.mode = RunMode::kPebMap;
  const auto peb = sim::run(s, {});
  const auto& pcdf = peb.table("peb_cdf");
  int peb_violations = 0;
  for (const char* metric : {"peb_3d", "peb_z"}) {
    for (std::size_t k = 1; k < s.snr_db_list.size(); ++k) {
      const auto lo = cdf_values(pcdf, {{"snr_db", s.snr_db_list[k - 1]}, {"metric", std::string(metric)}});
      const auto hi = cdf_values(pcdf, {{"snr_db", s.snr_db_list[k]}, {"metric", std::string(metric)}});
      if (lo.size() != 101 || hi.size() != 101) return {false, "missing PEB CDF rows"};
      for (int p = 0; p <= 100; ++p) peb_violations += !(hi[p] < lo[p]);
    }
  }

  s.mode = RunMode::kEstimatorMc;
  const auto mc = sim::run(s, {});
  const auto& mcdf = mc.table("mc_cdf");
  int dom_violations = 0;
  double tightest = INFINITY;
  for (double snr : s.snr_db_list) {
    for (const char* metric : {"error_3d", "error_z"}) {
      const auto nls = cdf_values(mcdf, {{"snr_db", snr}, {"estimator", std::string("nls")}, {"metric", std::string(metric)}});
      const auto lls = cdf_values(mcdf, {{"snr_db", snr}, {"estimator", std::string("lls")}, {"metric", std::string(metric)}});
      if (nls.size() != 101 || lls.size() != 101) return {false, "missing estimator CDF rows"};
      for (int p = 0; p <= 100; ++p) {
        dom_violations += !(nls[p] <= lls[p]);
        tightest = std::min(tightest, lls[p] - nls[p]);
      }
    }
  }

  const auto& summary = mc.table("mc_summary");
  double ratio = NAN;
  for (const auto& row : summary.rows()) {
    if (num(row, summary.column_index("snr_db")) == 15.0 &&
        std::get<std::string>(row[summary.column_index("estimator")]) == "nls") {
      ratio = num(row, summary.column_index("rmse_over_mean_peb"));
    }
  }
  const bool attain = ratio >= 0.5 && ratio <= 2.0;
  return {peb_violations == 0 && dom_violations == 0 && attain,
          fmt("(a) PEB percentile order violations %d; (b) NLS-over-LLS dominance violations %d "
              "(min LLS-NLS gap %.3g m); (c) NLS RMSE / mean PEB at 15 dB %.3f (within 2x); 10000 nodes",
              peb_violations, dom_violations, tightest, ratio)};
}

Outcome ac7() {
  std::mt19937_64 rng(estimators::derive_seed(kSeed, 7));
  std::uniform_real_distribution<double> ax(-10, 10), ay(-40, -2), az(-25, 15);
  std::uniform_real_distribution<double> nx(-9, 9), ny(1, 20), nz(5, 40);
  const geometry::Window w;
  estimators::SynthesisOptions exact;
  exact.noise_scale = 0.0;
  double worst = 0.0;
  int scenes = 0, skipped = 0, not_converged = 0;
  while (scenes < 100) {
    const std::vector<Point3> anchors{{ax(rng), ay(rng), az(rng)}, {ax(rng), ay(rng), az(rng)}, {ax(rng), ay(rng), az(rng)}};
    const Point3 truth{nx(rng), ny(rng), nz(rng)};
    try {
      const auto report = fisher::build_fim(anchors, truth, w, fisher::RangingModel::uniform(100e6, 10.0, 3));
      if (!report.identifiable() || report.ill_conditioned) {
        ++skipped;
        continue;
      }
    } catch (const Error&) {
      ++skipped;
      continue;
    }
    const auto meas = estimators::synthesize_ranges(truth, anchors, w, fisher::RangingModel::uniform(100e6, 10.0, 3),
                                                    scenes, exact);
    const auto est = estimators::estimate_diffraction_nls(meas, w, truth + Vec3{1, 1, 1});
    worst = std::max(worst, distance(est.alpha_hat, truth));
    not_converged += !est.converged;
    ++scenes;
  }
  return {worst <= 1e-6, fmt("max |alpha_hat - alpha| %.3g m over 100 scenes (tol 1e-6), %d not converged, "
                             "%d non-identifiable draws skipped",
                             worst, not_converged, skipped)};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome ac8(const Options& opt) {
  if (opt.cli.empty()) return {false, "no --cli given"};
  int compared = 0, differing = 0;
  for (const char* cmd : {"peb", "mc"}) {
    const fs::path a = opt.workdir / (std::string(cmd) + "_run1");
    const fs::path b = opt.workdir / (std::string(cmd) + "_run2");
    fs::remove_all(a);
    fs::remove_all(b);
    for (const auto& [dir, threads] : {std::pair{a, 1}, std::pair{b, 4}}) {
      const std::string line = "\"" + opt.cli + "\" " + cmd + " --seed 777 --samples 1000 --threads " +
                               std::to_string(threads) + " --out \"" + dir.string() + "\" > /dev/null";
      if (std::system(line.c_str()) != 0) return {false, std::string("command failed: ") + line};
    }
    for (const auto& entry : fs::directory_iterator(a)) {
      if (entry.path().extension() != ".csv") continue;
      ++compared;
      if (read_file(entry.path()) != read_file(b / entry.path().filename())) ++differing;
    }
  }
  return {compared > 0 && differing == 0,
          fmt("%d CSV files compared across two runs (1 vs 4 threads), %d differ", compared, differing)};
}

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    auto value = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << arg << "\n";
        std::exit(2);
      }
      return argv[++i];
    };
    if (arg == "--only") opt.only = std::stoi(value());
    else if (arg == "--cli") opt.cli = value();
    else if (arg == "--workdir") opt.workdir = value();
    else {
      std::cerr << "unknown argument " << arg << "\n";
      return 2;
    }
  }
  fs::create_directories(opt.workdir);

  const std::vector<Criterion> criteria{
      {1, "diffraction point vs golden section", 5.0, ac1},
      {2, "closed-form Jacobian vs finite differences", 5.0, ac2},
      {3, "power ratio closed form and exact-field agreement", 10.0, ac3},
      {4, "delay CRLB anchor", 1.0, ac4},
      {5, "identifiability over a 10x10x10 grid", 30.0, ac5},
      {6, "PEB and estimator CDFs at desk scale", 600.0, ac6},
      {7, "noiseless NLS recovery", 60.0, ac7},
      {8, "CLI determinism", 120.0, [&] { return ac8(opt); }},
  };

  bool all = true;
  for (const auto& c : criteria) {
    if (opt.only != 0 && opt.only != c.id) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_s;
    const bool pass = o.passed && in_time;
    all = all && pass;
    std::printf("AC%d %s %s: %s; %.2f s (limit %g s)%s\n", c.id, pass ? "PASS" : "FAIL", c.name, o.detail.c_str(),
                secs, c.limit_s, in_time ? "" : " OVER TIME");
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
