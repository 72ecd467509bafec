#include <benchmark/benchmark.h>

#include "generators.hpp"
#include "revsim/analysis/text.hpp"

static void BM_NgramDiversity(benchmark::State& state) {
  revsim::gen::Gen g(1);
  const auto toks = g.tokens(static_cast<std::size_t>(state.range(0)), 400);
  const auto n = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(revsim::analysis::ngram_diversity(toks, n));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_NgramDiversity)->ArgsProduct({{1000, 10000, 100000}, {1, 2, 3}});

static void BM_Tokenize(benchmark::State& state) {
  revsim::gen::Gen g(2);
  std::string text;
  for (const auto& t : g.tokens(static_cast<std::size_t>(state.range(0)), 400)) text += t + " ";
  for (auto _ : state) benchmark::DoNotOptimize(revsim::analysis::tokenize(text));
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(text.size()));
}
BENCHMARK(BM_Tokenize)->Arg(10000)->Arg(100000);

BENCHMARK_MAIN();
