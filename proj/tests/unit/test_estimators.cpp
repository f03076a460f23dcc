#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "diffpos/estimators.hpp"
#include "diffpos/scenario.hpp"
#include "test_support.hpp"

namespace {

using namespace diffpos;
using diffpos::testing::near;
using diffpos::testing::throws_code;
using estimators::Box;

const std::vector<Point3> kReference{{-10, -20, -10}, {0, -7, -20}, {10, -20, -10}};
const std::vector<Point3> kAligned{{0, -20, -10}, {0, -7, -20}, {0, -15, 0}};
const Box kBox{{-10, 0, 5}, {10, 20, 40}};

fisher::RangingModel model_db(double db, std::size_t m = 3) {
  return fisher::RangingModel::uniform(100e6, fisher::db_to_linear(db), m);
}

estimators::NlsOptions boxed() {
  estimators::NlsOptions o;
  o.search_box = kBox;
  return o;
}

TEST(Box, ContainsCenterClamp) {
  EXPECT_TRUE(kBox.contains({0, 10, 20}));
  EXPECT_FALSE(kBox.contains({0, -1, 20}));
  EXPECT_EQ(kBox.center(), (Point3{0, 10, 22.5}));
  EXPECT_EQ(kBox.clamp({-20, 30, 22}), (Point3{-10, 20, 22}));
}

TEST(DeriveSeed, DistinctStreams) {
  EXPECT_EQ(estimators::derive_seed(1, 2), estimators::derive_seed(1, 2));
  EXPECT_NE(estimators::derive_seed(1, 2), estimators::derive_seed(2, 1));
  EXPECT_NE(estimators::derive_seed(1, 2), estimators::derive_seed(1, 3));
}

TEST(Synthesis, NoiselessRangesArePathLengths) {
  estimators::SynthesisOptions exact;
  exact.noise_scale = 0.0;
  const Point3 node{2, 8, 20};
  const auto m = estimators::synthesize_ranges(node, kReference, {}, model_db(10), 3, exact);
  ASSERT_EQ(m.ranges.size(), 3u);
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(m.ranges[j], geometry::building_path_length(kReference[j], node, {}, geometry::EdgeKind::kUpper).path_length);
    EXPECT_NEAR(m.sigma[j], 0.10669052120168361, 1e-14);
  }
  exact.euclidean = true;
  const auto e = estimators::synthesize_ranges(node, kReference, {}, model_db(10), 3, exact);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(e.ranges[j], distance(kReference[j], node));
}

TEST(Synthesis, SeedDeterminism) {
  const Point3 node{-1, 5, 30};
  const auto a = estimators::synthesize_ranges(node, kReference, {}, model_db(3), 42);
  const auto b = estimators::synthesize_ranges(node, kReference, {}, model_db(3), 42);
  const auto c = estimators::synthesize_ranges(node, kReference, {}, model_db(3), 43);
  EXPECT_EQ(a.ranges, b.ranges);
  EXPECT_NE(a.ranges, c.ranges);
  EXPECT_EQ(a.seed, 42u);
}

TEST(Synthesis, NoiseIsUnbiasedWithModelVariance) {
  const Point3 node{3, 12, 17};
  const auto model = model_db(10, 1);
  const std::vector<Point3> one{kReference[0]};
  const double p = geometry::building_path_length(one[0], node, {}, geometry::EdgeKind::kUpper).path_length;
  const double sigma = fisher::range_sigma(model, 0);
  constexpr int kDraws = 100'000;
  double sum = 0.0;
  double sq = 0.0;
  for (int i = 0; i < kDraws; ++i) {
    const double err = estimators::synthesize_ranges(node, one, {}, model, i).ranges[0] - p;
    sum += err;
    sq += err * err;
  }
  EXPECT_LE(std::abs(sum / kDraws), 3.0 * sigma / std::sqrt(double(kDraws)));
  EXPECT_NEAR(std::sqrt(sq / kDraws) / sigma, 1.0, 0.01);
}

TEST(Synthesis, RejectsModelSizeMismatch) {
  EXPECT_TRUE(throws_code([] { estimators::synthesize_ranges({0, 5, 10}, kReference, {}, model_db(10, 2), 1); },
                          ErrorCode::kInvalidGeometry));
}

TEST(Nls, NoiselessRecoveryFromOffsetStart) {
  estimators::SynthesisOptions exact;
  exact.noise_scale = 0.0;
  std::mt19937_64 rng(estimators::derive_seed(3, 0));
  std::uniform_real_distribution<double> ux(-9, 9), uy(1, 20), uz(5, 40);
  for (int i = 0; i < 100; ++i) {
    const Point3 truth{ux(rng), uy(rng), uz(rng)};
    const auto m = estimators::synthesize_ranges(truth, kReference, {}, model_db(15), i, exact);
    const auto est = estimators::estimate_diffraction_nls(m, {}, truth + Vec3{1, 1, 1});
    EXPECT_TRUE(est.converged);
    ASSERT_TRUE(near(est.alpha_hat, truth, 1e-6)) << "scene " << i;
    EXPECT_LE(est.residual_norm, 1e-6);
  }
}

TEST(Nls, RequiresThreeAnchors) {
  estimators::SynthesisOptions exact;
  exact.noise_scale = 0.0;
  const std::vector<Point3> two{kReference[0], kReference[1]};
  const auto m = estimators::synthesize_ranges({0, 8, 20}, two, {}, model_db(15, 2), 1, exact);
  EXPECT_TRUE(throws_code([&] { estimators::estimate_diffraction_nls(m, {}, {1, 9, 21}); }, ErrorCode::kNotIdentifiable));
}

TEST(Nls, Deterministic) {
  const auto m = estimators::synthesize_ranges({-2, 9, 14}, kReference, {}, model_db(6), 77);
  const auto a = estimators::estimate_diffraction_nls(m, {}, kBox.center(), boxed());
  const auto b = estimators::estimate_diffraction_nls(m, {}, kBox.center(), boxed());
  EXPECT_EQ(a.alpha_hat, b.alpha_hat);
  EXPECT_EQ(a.iterations, b.iterations);
}

struct McStats {
  double rmse = 0.0;
  Vec3 mean_error;
  int not_converged = 0;
};

McStats monte_carlo(const Point3& node, const std::vector<Point3>& anchors, double snr_db, int trials,
                    const Point3& init) {
  McStats s;
  double sq = 0.0;
  for (int t = 0; t < trials; ++t) {
    const auto m = estimators::synthesize_ranges(node, anchors, {}, model_db(snr_db), estimators::derive_seed(99, t));
    const auto e = estimators::estimate_diffraction_nls(m, {}, init, boxed());
    const Vec3 d = e.alpha_hat - node;
    sq += dot(d, d);
    s.mean_error = s.mean_error + d / trials;
    s.not_converged += !e.converged;
  }
  s.rmse = std::sqrt(sq / trials);
  return s;
}

TEST(Nls, HighSnrErrorApproachesTheBound) {
  const Point3 node{2, 8, 20};
  constexpr int kTrials = 1000;
  const auto stats = monte_carlo(node, kReference, 15.0, kTrials, kBox.center());
  const double peb = *fisher::build_fim(kReference, node, {}, model_db(15)).peb_3d;
  // Sampling spread of an RMSE over 1000 three-dimensional trials is about
  // 1/sqrt(2 * 3000); allow three of those below the bound.
  EXPECT_GE(stats.rmse, peb * (1.0 - 3.0 / std::sqrt(6000.0)));
  EXPECT_LE(stats.rmse, 2.0 * peb);
  EXPECT_EQ(stats.not_converged, 0);
  // Unbiased to well within the spread of the mean.
  EXPECT_LE(norm(stats.mean_error), 4.0 * peb / std::sqrt(double(kTrials)));
}

TEST(Nls, EfficiencyImprovesWithSnr) {
  const Point3 node{-4, 12, 30};
  const auto low = monte_carlo(node, kReference, 3.0, 300, kBox.center());
  const auto high = monte_carlo(node, kReference, 15.0, 300, kBox.center());
  const double peb_low = *fisher::build_fim(kReference, node, {}, model_db(3)).peb_3d;
  const double peb_high = *fisher::build_fim(kReference, node, {}, model_db(15)).peb_3d;
  EXPECT_LT(high.rmse, low.rmse);
  EXPECT_LE(high.rmse / peb_high, low.rmse / peb_low);
}

TEST(Nls, DegenerateGeometryLeavesXUndetermined) {
  const Point3 node{0, 10, 20};
  const auto stats = [&] {
    double sx = 0.0, sz = 0.0;
    int nc = 0;
    for (int t = 0; t < 200; ++t) {
      const auto m = estimators::synthesize_ranges(node, kAligned, {}, model_db(15), t);
      const auto e = estimators::estimate_diffraction_nls(m, {}, node + Vec3{1, 1, 1}, boxed());
      sx += e.alpha_hat.x * e.alpha_hat.x;
      sz += (e.alpha_hat.z - node.z) * (e.alpha_hat.z - node.z);
      nc += !e.converged;
    }
    return std::tuple{std::sqrt(sx / 200), std::sqrt(sz / 200), nc};
  }();
  const auto [x_rms, z_rms, not_converged] = stats;
  EXPECT_GT(x_rms, 3.0 * z_rms);
  EXPECT_GT(not_converged, 0);
}

TEST(Lls, ExactOnEuclideanRangesWithFourAnchors) {
  estimators::SynthesisOptions los;
  los.noise_scale = 0.0;
  los.euclidean = true;
  std::vector<Point3> four = kReference;
  four.push_back({5, -12, 25});
  const Point3 truth{3, 7, 19};
  const auto m = estimators::synthesize_ranges(truth, four, {}, model_db(10, 4), 1, los);
  EXPECT_TRUE(near(estimators::estimate_lls_baseline(m).alpha_hat, truth, 1e-9));
  EXPECT_TRUE(near(estimators::estimate_lls_baseline(m, estimators::LlsVariant::kMinimumNorm).alpha_hat, truth, 1e-9));
}

TEST(Lls, ThreeAnchorsResolvedOnTheBuildingSide) {
  estimators::SynthesisOptions los;
  los.noise_scale = 0.0;
  los.euclidean = true;
  const Point3 truth{3, 7, 19};
  const auto m = estimators::synthesize_ranges(truth, kReference, {}, model_db(10), 1, los);
  EXPECT_TRUE(near(estimators::estimate_lls_baseline(m).alpha_hat, truth, 1e-6));
}

TEST(Lls, DiffractionRangesCarryNlosBias) {
  estimators::SynthesisOptions exact;
  exact.noise_scale = 0.0;
  for (const Point3& truth : {Point3{2, 8, 20}, Point3{0, 10, 22}, Point3{-5, 3, 9}}) {
    const auto m = estimators::synthesize_ranges(truth, kReference, {}, model_db(10), 1, exact);
    EXPECT_GT(distance(estimators::estimate_lls_baseline(m).alpha_hat, truth), 1.0);
  }
}

TEST(Lls, DegenerateAnchors) {
  estimators::RangeMeasurementSet m;
  m.anchors = {{0, -10, 0}, {0, -10, 0}, {0, -10, 0}};
  m.ranges = {20, 20, 20};
  m.sigma = {1, 1, 1};
  EXPECT_TRUE(throws_code([&] { estimators::estimate_lls_baseline(m); }, ErrorCode::kDegenerateGeometry));
  m.anchors.resize(2);
  m.ranges.resize(2);
  m.sigma.resize(2);
  EXPECT_TRUE(throws_code([&] { estimators::estimate_lls_baseline(m); }, ErrorCode::kDegenerateGeometry));
}

}  // namespace
