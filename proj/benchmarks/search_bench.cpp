#include <benchmark/benchmark.h>

#include "mmrag/embedding.hpp"
#include "mmrag/rng.hpp"
#include "mmrag/vector_index.hpp"

namespace {

using namespace mmrag;

EmbeddingVector random_vector(SplitMix64& rng, std::size_t dim) {
  EmbeddingVector v;
  v.values.reserve(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    v.values.push_back(static_cast<float>(2.0 * rng.next_unit() - 1.0));
  }
  return v;
}

VectorIndex build_index(std::size_t count, std::size_t dim) {
  SplitMix64 rng(1);
  VectorIndex index(dim);
  std::vector<KbEntry> entries;
  entries.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    KbEntry e;
    e.entry_id = i;
    e.vector = random_vector(rng, dim);
    entries.push_back(std::move(e));
  }
  index.add_entries(std::move(entries));
  index.seal();
  return index;
}

void BM_SearchTopK(benchmark::State& state) {
  const std::size_t count = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = static_cast<std::size_t>(state.range(1));
  const VectorIndex index = build_index(count, dim);
  SplitMix64 rng(2);
  const EmbeddingVector query = random_vector(rng, dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(index.search_topk(query, 200));
  }
  state.SetItemsProcessed(state.iterations() * count);
}
BENCHMARK(BM_SearchTopK)
    ->Args({10000, 128})
    ->Args({100000, 128})
    ->Args({10000, 1536})
    ->Args({100000, 1536})
    ->Unit(benchmark::kMillisecond);

void BM_DotF32(benchmark::State& state) {
  const std::size_t dim = static_cast<std::size_t>(state.range(0));
  SplitMix64 rng(3);
  const EmbeddingVector a = random_vector(rng, dim);
  const EmbeddingVector b = random_vector(rng, dim);
  for (auto _ : state) {
    benchmark::DoNotOptimize(dot_f32(a.values, b.values));
  }
  state.SetItemsProcessed(state.iterations() * dim);
}
BENCHMARK(BM_DotF32)->Arg(128)->Arg(512)->Arg(1536);

}  // namespace

BENCHMARK_MAIN();
