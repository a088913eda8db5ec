#include <benchmark/benchmark.h>

#include <random>

#include "stcov/depth.hpp"

using namespace stcov;

static RowMatrix random_curves(Eigen::Index n, Eigen::Index T) {
  std::mt19937_64 gen(42);
  std::normal_distribution<double> normal;
  RowMatrix m(n, T);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index t = 0; t < T; ++t) m(i, t) = normal(gen);
  }
  return m;
}

static void BM_DepthCounts(benchmark::State& state) {
  const auto m = random_curves(state.range(0), 11);
  for (auto _ : state) benchmark::DoNotOptimize(depth_counts(m));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DepthCounts)->RangeMultiplier(2)->Range(16, 256)->Complexity();

static void BM_DepthCountsDirect(benchmark::State& state) {
  const auto m = random_curves(state.range(0), 11);
  for (auto _ : state) benchmark::DoNotOptimize(depth_counts_direct(m));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DepthCountsDirect)->RangeMultiplier(2)->Range(16, 128)->Complexity();

// 120 observed curves located one at a time in a 120-curve reference.
static void BM_ReferenceLocate(benchmark::State& state) {
  const ReferenceDepthIndex index(random_curves(120, 11));
  const auto obs = random_curves(120, 11);
  for (auto _ : state) {
    for (Eigen::Index i = 0; i < obs.rows(); ++i) {
      benchmark::DoNotOptimize(index.locate({obs.data() + i * obs.cols(), static_cast<std::size_t>(obs.cols())}));
    }
  }
}
BENCHMARK(BM_ReferenceLocate);

static void BM_ReferenceBuild(benchmark::State& state) {
  const auto ref = random_curves(120, 11);
  for (auto _ : state) {
    ReferenceDepthIndex index(ref);
    benchmark::DoNotOptimize(index.size());
  }
}
BENCHMARK(BM_ReferenceBuild);

BENCHMARK_MAIN();
