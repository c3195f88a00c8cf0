#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "cadence/metrics.hpp"
#include "cadence/random.hpp"

using namespace cadence;

namespace {

std::vector<std::string> random_labels(StableRng& rng, const std::vector<std::string>& classes, std::size_t n) {
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(classes[rng.below(classes.size())]);
  return out;
}

void BM_BinaryMetrics(benchmark::State& state) {
  StableRng rng(4);
  const std::vector<std::string> classes{"depressed", "not_depressed"};
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto preds = random_labels(rng, classes, n);
  const auto truths = random_labels(rng, classes, n);
  for (auto _ : state) benchmark::DoNotOptimize(binary_metrics(confusion(preds, truths, "depressed")));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BinaryMetrics)->Range(64, 1 << 16);

void BM_WeightedF1(benchmark::State& state) {
  StableRng rng(5);
  const std::vector<std::string> classes{"normal", "mild", "moderate", "severe"};
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto preds = random_labels(rng, classes, n);
  const auto truths = random_labels(rng, classes, n);
  for (auto _ : state) benchmark::DoNotOptimize(weighted_f1(per_class_f1(preds, truths, classes)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WeightedF1)->Range(64, 1 << 16);

}  // namespace

BENCHMARK_MAIN();
