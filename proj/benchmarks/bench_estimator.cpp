#include <benchmark/benchmark.h>

#include "stcov/covmodels.hpp"
#include "stcov/estimator.hpp"
#include "stcov/simfield.hpp"

using namespace stcov;

static const SpaceTimeDataset& dataset() {
  static const auto data =
      simulate_block_sequential(CovarianceSpec::gneiting_sep(0.5), unit_grid(4, 4), 2000, 100, 3);
  return data;
}

static void BM_CrossCov(benchmark::State& state) {
  const auto& d = dataset();
  for (auto _ : state) benchmark::DoNotOptimize(cross_cov_hat(d.series(0), d.series(5), 7));
}
BENCHMARK(BM_CrossCov);

static void BM_AllPairs(benchmark::State& state) {
  const auto kind = state.range(0) == 0 ? TestKind::Separability : TestKind::Symmetry;
  for (auto _ : state) benchmark::DoNotOptimize(all_pairs_test_fns(dataset(), kind, 10));
}
BENCHMARK(BM_AllPairs)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
