// Serial reference vs OpenMP RANSAC, and per-leaf scan measurement at
// different thread counts.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "leafmetric/leaf_measure.hpp"
#include "leafmetric/plane_geometry.hpp"
#include "leafmetric/synth_data.hpp"

using namespace leafmetric;

namespace {

PointCloud leaf_cloud(double length) {
  synth::LeafSpec s;
  s.length = length;
  s.width = 0.6 * length;
  s.noise_sigma = 1.0;
  s.outlier_fraction = 0.1;
  s.outlier_min_distance = 10.0;
  s.seed = 3;
  return synth::generate_leaf(s).cloud;
}

geometry::RansacConfig ransac_config() {
  geometry::RansacConfig rc;
  rc.seed = 1;
  return rc;
}

void BM_RansacSerial(benchmark::State& state) {
  const PointCloud c = leaf_cloud(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(geometry::fit_plane_ransac_serial(c, ransac_config()));
  state.counters["points"] = static_cast<double>(c.size());
}

void BM_RansacOpenMP(benchmark::State& state) {
  const PointCloud c = leaf_cloud(static_cast<double>(state.range(0)));
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(geometry::fit_plane_ransac(c, ransac_config()));
  state.counters["points"] = static_cast<double>(c.size());
}

void BM_MeasureScan(benchmark::State& state) {
  synth::ScanSpec spec;
  for (int i = 0; i < 12; ++i) {
    synth::LeafSpec s;
    s.length = 40 + 4 * i;
    s.width = 25;
    s.noise_sigma = 1.0;
    s.seed = i;
    spec.leaves.push_back({"leaf_" + std::to_string(i), s});
  }
  const auto scan = synth::generate_scan(spec);
  measure::ExtentConfig ec;
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(measure::measure_masks(scan.cloud, scan.masks, ec, measure::Method::selected));
  }
}

}  // namespace

BENCHMARK(BM_RansacSerial)->Arg(40)->Arg(80)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RansacOpenMP)->Args({40, 1})->Args({40, 4})->Args({80, 1})->Args({80, 4})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeasureScan)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
