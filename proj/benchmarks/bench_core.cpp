#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "diffpos/estimators.hpp"
#include "diffpos/fisher.hpp"
#include "diffpos/geometry.hpp"
#include "diffpos/gtd.hpp"
#include "diffpos/oracles.hpp"
#include "diffpos/scenario.hpp"

namespace {

using namespace diffpos;

std::vector<oracles::BuildingScene> scenes(std::size_t n) {
  std::mt19937_64 rng(12345);
  std::vector<oracles::BuildingScene> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(oracles::random_building_scene(rng));
  return out;
}

void BM_DiffractionPoint(benchmark::State& state) {
  const auto s = scenes(256);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& sc = s[i++ % s.size()];
    benchmark::DoNotOptimize(geometry::building_path_length(sc.anchor, sc.node, sc.window, geometry::EdgeKind::kUpper));
  }
}
BENCHMARK(BM_DiffractionPoint);

void BM_GoldenSection(benchmark::State& state) {
  const auto s = scenes(256);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& sc = s[i++ % s.size()];
    const auto edge = geometry::build_edge_frame(geometry::EdgeKind::kUpper, sc.window.x1, sc.window.x2,
                                                 geometry::window_edge_height(sc.node, sc.window, geometry::EdgeKind::kUpper));
    benchmark::DoNotOptimize(oracles::golden_section_path(sc.anchor, sc.node, edge));
  }
}
BENCHMARK(BM_GoldenSection);

void BM_PathGradient(benchmark::State& state) {
  const auto s = scenes(256);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& sc = s[i++ % s.size()];
    benchmark::DoNotOptimize(fisher::path_gradient(sc.anchor, sc.node, sc.window));
  }
}
BENCHMARK(BM_PathGradient);

void BM_ExactPowerRatio(benchmark::State& state) {
  const double k = gtd::wavenumber(28e9);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gtd::exact_power_ratio({0, -10, 0}, {0, 15, 10}, {}, gtd::kXPolarized, k));
  }
}
BENCHMARK(BM_ExactPowerRatio);

void BM_BuildFim(benchmark::State& state) {
  const Scenario tv = reference_scenario();
  const auto model = fisher::RangingModel::uniform(tv.bandwidth_hz, fisher::db_to_linear(9.0), 3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(fisher::build_fim(tv.anchors, {2, 8, 20}, tv.window, model));
  }
}
BENCHMARK(BM_BuildFim);

void BM_NlsEstimate(benchmark::State& state) {
  const Scenario tv = reference_scenario();
  const auto model = fisher::RangingModel::uniform(tv.bandwidth_hz, fisher::db_to_linear(static_cast<double>(state.range(0))), 3);
  estimators::NlsOptions opt;
  opt.search_box = tv.building_box;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    const auto meas = estimators::synthesize_ranges({2, 8, 20}, tv.anchors, tv.window, model, seed++);
    benchmark::DoNotOptimize(estimators::estimate_diffraction_nls(meas, tv.window, tv.building_box.center(), opt));
  }
}
BENCHMARK(BM_NlsEstimate)->Arg(3)->Arg(15);

void BM_LlsBaseline(benchmark::State& state) {
  const Scenario tv = reference_scenario();
  const auto model = fisher::RangingModel::uniform(tv.bandwidth_hz, fisher::db_to_linear(9.0), 3);
  const auto meas = estimators::synthesize_ranges({2, 8, 20}, tv.anchors, tv.window, model, 1);
  for (auto _ : state) benchmark::DoNotOptimize(estimators::estimate_lls_baseline(meas));
}
BENCHMARK(BM_LlsBaseline);

}  // namespace

BENCHMARK_MAIN();
