#include <benchmark/benchmark.h>

#include "generators.hpp"
#include "revsim/analysis/features.hpp"

static void BM_ExtractFeatures(benchmark::State& state) {
  revsim::gen::Gen g(3);
  std::vector<revsim::PaperDoc> docs;
  for (int i = 0; i < 16; ++i) docs.push_back(g.doc("b" + std::to_string(i)));
  const auto fx = revsim::analysis::FeatureExtractor::with_defaults();
  for (auto _ : state)
    for (const auto& d : docs) benchmark::DoNotOptimize(fx.extract(d));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(docs.size()));
}
BENCHMARK(BM_ExtractFeatures);

BENCHMARK_MAIN();
