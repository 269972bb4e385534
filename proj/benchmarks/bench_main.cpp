// Microbenchmarks for the pipeline's hot paths: projection, trajectory
// splitting, frame selection, and the statistics kernels.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "podpipe/analytics.hpp"
#include "podpipe/field_layout.hpp"
#include "podpipe/frames.hpp"
#include "podpipe/geo.hpp"
#include "podpipe/sim.hpp"
#include "podpipe/split.hpp"

namespace {

podpipe::FieldLayout bench_layout() {
  podpipe::FieldLayout l;
  l.origin = {40.0, -88.0};
  l.column_axis_bearing_deg = 0.0;
  l.n_columns = 8;
  l.n_ranges = 36;
  l.plot_length_m = 1.0;
  l.alley_length_m = 0.5;
  l.row_spacing_m = 0.76;
  l.base_plot_id = 1000;
  l.serpentine_even_ascending = true;
  return l;
}

podpipe::SimConfig bench_sim_config() {
  podpipe::SimConfig cfg;
  cfg.layout = bench_layout();
  cfg.seed = 7;
  return cfg;
}

void BM_ProjectRoundTrip(benchmark::State& state) {
  const podpipe::GeoPoint origin{40.0, -88.0};
  const podpipe::GeoPoint p{40.0005, -88.0007};
  for (auto _ : state) {
    const auto local = podpipe::project_to_local(origin, p);
    const auto back = podpipe::unproject_from_local(origin, local);
    benchmark::DoNotOptimize(back);
  }
}
BENCHMARK(BM_ProjectRoundTrip);

void BM_SplitByGps(benchmark::State& state) {
  const auto sim = podpipe::simulate(bench_sim_config());
  const auto& c = sim.collections[1];
  const podpipe::FieldLayout layout = bench_layout();
  const podpipe::SplitOptions opts;
  for (auto _ : state) {
    auto slices = podpipe::split_by_gps(c, layout, opts);
    benchmark::DoNotOptimize(slices);
  }
}
BENCHMARK(BM_SplitByGps);

void BM_SplitByLidar(benchmark::State& state) {
  const auto sim = podpipe::simulate(bench_sim_config());
  const auto& c = sim.collections[1];
  const podpipe::FieldLayout layout = bench_layout();
  const podpipe::SplitOptions opts;
  for (auto _ : state) {
    auto slices = podpipe::split_by_lidar(c, layout, opts);
    benchmark::DoNotOptimize(slices);
  }
}
BENCHMARK(BM_SplitByLidar);

void BM_SelectFrames(benchmark::State& state) {
  const auto sim = podpipe::simulate(bench_sim_config());
  const auto& c = sim.collections[1];
  const podpipe::FieldLayout layout = bench_layout();
  const auto slices = podpipe::split_by_gps(c, layout, podpipe::SplitOptions{});
  for (auto _ : state) {
    for (const auto& s : slices) {
      auto sel = podpipe::select_frames(s, c.frames, c.odometry, 2, 0.5);
      benchmark::DoNotOptimize(sel);
    }
  }
}
BENCHMARK(BM_SelectFrames);

void BM_PearsonR(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(42);
  std::normal_distribution<double> d(0.0, 1.0);
  podpipe::PairedSeries s;
  s.label_x = "x";
  s.label_y = "y";
  for (std::size_t i = 0; i < n; ++i) {
    const double x = d(rng);
    s.records.push_back({static_cast<int>(i), std::nullopt, x, x + d(rng)});
  }
  for (auto _ : state) {
    const double r = podpipe::pearson_r(s);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_PearsonR)->Arg(1000)->Arg(100000);

void BM_Filter2Sigma(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(43);
  std::normal_distribution<double> d(0.0, 1.0);
  podpipe::PairedSeries s;
  s.label_x = "x";
  s.label_y = "y";
  for (std::size_t i = 0; i < n; ++i) {
    const double x = d(rng);
    s.records.push_back({static_cast<int>(i), std::nullopt, x, 2.0 * x + d(rng)});
  }
  for (auto _ : state) {
    auto result = podpipe::filter_2sigma(s);
    benchmark::DoNotOptimize(result);
  }
}
BENCHMARK(BM_Filter2Sigma)->Arg(1000)->Arg(100000);

void BM_Simulate(benchmark::State& state) {
  const auto cfg = bench_sim_config();
  for (auto _ : state) {
    auto sim = podpipe::simulate(cfg);
    benchmark::DoNotOptimize(sim);
  }
}
BENCHMARK(BM_Simulate);

}  // namespace

BENCHMARK_MAIN();
