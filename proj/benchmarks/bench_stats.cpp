#include <benchmark/benchmark.h>

#include "generators.hpp"
#include "revsim/analysis/stats.hpp"

static void BM_Pearson(benchmark::State& state) {
  revsim::gen::Gen g(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto xs = g.reals(n, -10, 10), ys = g.reals(n, -10, 10);
  for (auto _ : state) benchmark::DoNotOptimize(revsim::analysis::pearson(xs, ys));
}
BENCHMARK(BM_Pearson)->Arg(10)->Arg(1000)->Arg(100000);

static void BM_PairedT(benchmark::State& state) {
  revsim::gen::Gen g(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = g.reals(n, 1, 10), b = g.reals(n, 1, 10);
  for (auto _ : state) benchmark::DoNotOptimize(revsim::analysis::paired_t(a, b));
}
BENCHMARK(BM_PairedT)->Arg(10)->Arg(1000);

BENCHMARK_MAIN();
