#include "diffpos/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "diffpos/errors.hpp"
#include "diffpos/estimators.hpp"
#include "diffpos/fisher.hpp"
#include "diffpos/geometry.hpp"
#include "diffpos/gtd.hpp"
#include "diffpos/oracles.hpp"
#include "diffpos/scenario.hpp"

namespace diffpos {

namespace {

std::string describe(const char* what, double value, double limit) {
  std::ostringstream s;
  s << what << " " << value << " (limit " << limit << ")";
  return s.str();
}

template <typename F>
CheckResult guarded(const char* name, F&& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {name, false, std::string("threw: ") + e.what()};
  }
}

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  return normalized(Vec3{g(rng), g(rng), g(rng)});
}

double frame_residual(const Vec3& a, const Vec3& b, const Vec3& c) {
  return std::max({std::abs(norm(a) - 1.0), std::abs(norm(b) - 1.0), std::abs(norm(c) - 1.0),
                   std::abs(dot(a, b)), std::abs(dot(b, c)), std::abs(dot(a, c))});
}

}  // namespace

std::vector<CheckResult> run_self_check(std::uint64_t seed, std::size_t scenes) {
  std::vector<CheckResult> out;

  out.push_back(guarded("diffraction_point_vs_golden_section", [&] {
    std::mt19937_64 rng(estimators::derive_seed(seed, 1));
    double worst = 0.0;
    std::size_t mismatched_corner = 0;
    for (std::size_t i = 0; i < scenes; ++i) {
      const auto s = oracles::random_edge_scene(rng);
      const auto ref = oracles::golden_section_path(s.anchor, s.node, s.edge);
      try {
        const auto sol = geometry::solve_diffraction_point(s.anchor, s.node, s.edge);
        worst = std::max(worst, std::abs(sol.path_length - ref.path_length));
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kCornerDiffraction || !ref.at_endpoint) ++mismatched_corner;
      }
    }
    return CheckResult{"diffraction_point_vs_golden_section", worst <= 1e-9 && mismatched_corner == 0,
                       describe("max |dp| m", worst, 1e-9) + ", corner mismatches " +
                           std::to_string(mismatched_corner)};
  }));

  out.push_back(guarded("jacobian_vs_finite_differences", [&] {
    std::mt19937_64 rng(estimators::derive_seed(seed, 2));
    double worst = 0.0;
    for (std::size_t i = 0; i < scenes; ++i) {
      const auto s = oracles::random_building_scene(rng);
      const Vec3 g = fisher::path_gradient(s.anchor, s.node, s.window);
      const Vec3 fd = oracles::finite_difference_gradient(s.anchor, s.node, s.window);
      worst = std::max(worst, norm(g - fd) / norm(fd));
    }
    return CheckResult{"jacobian_vs_finite_differences", worst <= 1e-5,
                       describe("max relative error", worst, 1e-5)};
  }));

  out.push_back(guarded("delay_crlb_anchor", [&] {
    const auto model = fisher::RangingModel::uniform(100e6, fisher::db_to_linear(10.0), 1);
    const double sigma = fisher::range_sigma(model, 0);
    return CheckResult{"delay_crlb_anchor", std::abs(sigma - 0.1067) <= 1e-4,
                       describe("c*sqrt(CRLB) m", sigma, 0.1067)};
  }));

  out.push_back(guarded("power_ratio_anchors", [&] {
    const double r60 = gtd::power_ratio(kPi / 3.0);
    const double r90 = gtd::power_ratio(kPi / 2.0);
    const bool ok = std::abs(r60 - 3.0) <= 1e-12 && r90 == 1.0;
    return CheckResult{"power_ratio_anchors", ok,
                       "ratio(60 deg) " + std::to_string(r60) + ", ratio(90 deg) " + std::to_string(r90)};
  }));

  out.push_back(guarded("identifiability_cases", [&] {
    const geometry::Window w;
    const Scenario tv = reference_scenario();
    const std::vector<Point3> aligned{{0.0, -20.0, -10.0}, {0.0, -7.0, -20.0}, {0.0, -15.0, 0.0}};
    const int r_aligned = fisher::identifiability(aligned, {0.0, 10.0, 20.0}, w).rank;
    const int r_table = fisher::identifiability(tv.anchors, {0.0, 10.0, 22.0}, w).rank;
    const std::vector<Point3> two(tv.anchors.begin(), tv.anchors.begin() + 2);
    const int r_two = fisher::identifiability(two, {3.0, 8.0, 15.0}, w).rank;
    const bool ok = r_aligned == 2 && r_table == 3 && r_two <= 2;
    return CheckResult{"identifiability_cases", ok,
                       "aligned rank " + std::to_string(r_aligned) + ", reference rank " +
                           std::to_string(r_table) + ", two-anchor rank " + std::to_string(r_two)};
  }));

  out.push_back(guarded("ray_frame_orthonormality", [&] {
    std::mt19937_64 rng(estimators::derive_seed(seed, 3));
    double worst = 0.0;
    for (std::size_t i = 0; i < scenes; ++i) {
      const auto f = gtd::ray_frames(random_unit(rng), random_unit(rng), random_unit(rng));
      worst = std::max({worst, frame_residual(f.phi_p, f.beta0_p, f.s_p), frame_residual(f.phi, f.beta0, f.s)});
    }
    return CheckResult{"ray_frame_orthonormality", worst <= 1e-12, describe("max residual", worst, 1e-12)};
  }));

  out.push_back(guarded("noiseless_nls_recovery", [&] {
    std::mt19937_64 rng(estimators::derive_seed(seed, 4));
    const Scenario tv = reference_scenario();
    const geometry::Window w;
    const auto model = fisher::RangingModel::uniform(tv.bandwidth_hz, fisher::db_to_linear(15.0), 3);
    estimators::SynthesisOptions exact;
    exact.noise_scale = 0.0;
    std::uniform_real_distribution<double> ux(-9.0, 9.0), uy(1.0, 20.0), uz(5.0, 40.0);
    double worst = 0.0;
    const std::size_t n = std::min<std::size_t>(scenes, 100);
    for (std::size_t i = 0; i < n; ++i) {
      const Point3 truth{ux(rng), uy(rng), uz(rng)};
      const auto meas = estimators::synthesize_ranges(truth, tv.anchors, w, model, i, exact);
      const auto est = estimators::estimate_diffraction_nls(meas, w, truth + Vec3{1.0, 1.0, 1.0});
      worst = std::max(worst, distance(est.alpha_hat, truth));
    }
    return CheckResult{"noiseless_nls_recovery", worst <= 1e-6, describe("max error m", worst, 1e-6)};
  }));

  return out;
}

}  // namespace diffpos
