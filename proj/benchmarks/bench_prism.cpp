#include <benchmark/benchmark.h>

#include "prism/eval/metrics.hpp"
#include "prism/eval/random.hpp"
#include "prism/eval/synthetic.hpp"
#include "prism/mock_responder.hpp"
#include "prism/orchestrator.hpp"
#include "prism/store.hpp"

using namespace prism;

namespace {

SeverityVector random_severities(eval::Rng& rng) {
  PerDimension<double> s;
  for (auto& v : s) v = rng.uniform();
  return SeverityVector(s);
}

void BM_ApplyFeedback(benchmark::State& state) {
  eval::Rng rng(1);
  auto p = init_profile("b", PopulationPrior{});
  const auto s = random_severities(rng);
  for (auto _ : state) {
    p = apply_feedback(p, Label::flag, s);
    benchmark::DoNotOptimize(p);
  }
}
BENCHMARK(BM_ApplyFeedback);

void BM_RecomputeWeights(benchmark::State& state) {
  eval::Rng rng(2);
  std::vector<SeverityVector> history;
  for (int i = 0; i < state.range(0); ++i) history.push_back(random_severities(rng));
  for (auto _ : state) benchmark::DoNotOptimize(recompute_weights(history));
}
BENCHMARK(BM_RecomputeWeights)->Arg(100)->Arg(1000);

void BM_LexiconScore(benchmark::State& state) {
  const auto pop = eval::make_synthetic_population({.corpus_size = 50, .annotators = 1,
                                                    .annotations_per_annotator = 10});
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(pop.lexicon.score(pop.texts[i++ % pop.texts.size()]));
  }
}
BENCHMARK(BM_LexiconScore);

void BM_ModerateMock(benchmark::State& state) {
  const auto pop = eval::make_synthetic_population({.corpus_size = 50, .annotators = 1,
                                                    .annotations_per_annotator = 10});
  auto lexicon = std::make_shared<Lexicon>(pop.lexicon);
  OrchestratorDeps deps;
  deps.store = make_memory_store();
  deps.lexicon = lexicon;
  deps.gateway = std::make_shared<LlmGateway>(GatewayConfig{}, nullptr, make_mock_responder(lexicon));
  deps.parallel_experts = state.range(0) != 0;
  Orchestrator orch(deps);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& text = pop.texts[i % pop.texts.size()];
    benchmark::DoNotOptimize(orch.moderate({"bench", "c" + std::to_string(i++), text}));
  }
}
BENCHMARK(BM_ModerateMock)->Arg(0)->Arg(1);

void BM_FeedbackTransaction(benchmark::State& state) {
  auto store = make_memory_store();
  eval::Rng rng(3);
  int i = 0;
  for (auto _ : state) {
    FeedbackEvent e;
    e.content_id = "c" + std::to_string(i++ % 200);
    e.label = Label::flag;
    e.severities = random_severities(rng);
    benchmark::DoNotOptimize(store->apply_feedback_transactional("bench", e, PopulationPrior{}));
  }
}
BENCHMARK(BM_FeedbackTransaction);

void BM_Metrics(benchmark::State& state) {
  eval::Rng rng(4);
  std::vector<Label> p, g;
  for (int i = 0; i < 10000; ++i) {
    p.push_back(rng.below(2) ? Label::flag : Label::keep);
    g.push_back(rng.below(2) ? Label::flag : Label::keep);
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::compute_metrics(p, g));
}
BENCHMARK(BM_Metrics);

}  // namespace

BENCHMARK_MAIN();
