#include <benchmark/benchmark.h>

#include "cadence/prompts.hpp"
#include "support/generators.hpp"

using namespace cadence;

namespace {

void BM_InferencePrompt(benchmark::State& state) {
  StableRng rng(6);
  const Dialogue dialogue = testkit::random_dialogue(rng, "d0");
  PromptOptions options;
  options.use_rag = state.range(0) != 0;
  options.use_cot = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(build_inference_prompt(dialogue, options));
}
BENCHMARK(BM_InferencePrompt)->ArgsProduct({{0, 1}, {0, 1}});

void BM_ReportPromptWithPriors(benchmark::State& state) {
  StableRng rng(7);
  const Dialogue dialogue = testkit::random_dialogue(rng, "d0");
  const SourceLabel label = testkit::random_label(rng);
  const CriteriaCorpus corpus = testkit::random_corpus(rng, 1);
  const SeverityStandard standard = SeverityStandard::hamd_default();
  const PromptOptions options;
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_report_prompt(dialogue, label, &corpus.documents[0], standard, options));
  }
}
BENCHMARK(BM_ReportPromptWithPriors);

void BM_RenderTranscript(benchmark::State& state) {
  StableRng rng(8);
  const Dialogue dialogue = testkit::random_dialogue(rng, "d0");
  for (auto _ : state) benchmark::DoNotOptimize(render_transcript(dialogue));
}
BENCHMARK(BM_RenderTranscript);

}  // namespace

BENCHMARK_MAIN();
