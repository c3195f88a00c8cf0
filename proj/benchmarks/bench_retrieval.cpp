#include <benchmark/benchmark.h>

#include "cadence/retrieval.hpp"
#include "support/generators.hpp"

using namespace cadence;

namespace {

void BM_HashingEmbed(benchmark::State& state) {
  StableRng rng(1);
  HashingEmbedder embedder;
  const std::string text = testkit::random_words(rng, 200, 200);
  for (auto _ : state) benchmark::DoNotOptimize(embedder.embed(text));
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_HashingEmbed);

void BM_SelectBest(benchmark::State& state) {
  StableRng rng(2);
  HashingEmbedder embedder;
  std::vector<EmbeddingVector> docs;
  for (int64_t i = 0; i < state.range(0); ++i) docs.push_back(embedder.embed(testkit::random_sentence(rng)));
  const EmbeddingVector query = embedder.embed(testkit::random_words(rng, 40, 40));
  for (auto _ : state) benchmark::DoNotOptimize(select_best(query, docs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SelectBest)->Range(8, 4096);

void BM_RetrieveCriteria(benchmark::State& state) {
  StableRng rng(3);
  HashingEmbedder embedder;
  const CriteriaCorpus corpus = testkit::random_corpus(rng, static_cast<std::size_t>(state.range(0)));
  const std::string content = testkit::random_words(rng, 80, 80);
  for (auto _ : state) benchmark::DoNotOptimize(retrieve_criteria(content, corpus, embedder));
}
BENCHMARK(BM_RetrieveCriteria)->Arg(8)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
