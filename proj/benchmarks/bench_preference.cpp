#include <prefchain/behavior_graph.hpp>
#include <prefchain/embedding.hpp>
#include <prefchain/ingest.hpp>
#include <prefchain/llm_remodel.hpp>
#include <prefchain/pipeline.hpp>
#include <prefchain/preference.hpp>

#include <benchmark/benchmark.h>

using namespace prefchain;

namespace {

std::vector<TripRecord> records(std::size_t n) {
    auto spec = default_synthetic_spec();
    spec.population = n;
    spec.seed = 17;
    return generate_synthetic(spec);
}

} // namespace

static void BM_OptionScores(benchmark::State &state) {
    const auto rs = records(static_cast<std::size_t>(state.range(0)));
    const auto g = build_from_records(rs);
    HashEmbeddingProvider hp;
    IdentityMockLlm llm;
    PipelineConfig cfg;
    cfg.top_k = static_cast<std::size_t>(state.range(1));
    PreferenceChain chain(g, hp, llm, cfg);
    const auto sub = chain.subgraph(query_from_record(rs.front()));
    const auto modes = schema::primary_mode();
    for (auto _ : state) {
        benchmark::DoNotOptimize(option_scores(sub, modes));
    }
    state.counters["subgraph_nodes"] = static_cast<double>(sub.graph.node_count());
}
BENCHMARK(BM_OptionScores)->Args({200, 5})->Args({200, 20})->Args({2000, 5})->Args({2000, 20});

static void BM_DecideAll(benchmark::State &state) {
    const auto rs = records(static_cast<std::size_t>(state.range(0)));
    const auto g = build_from_records(rs);
    CachingEmbeddingProvider hp(std::make_shared<HashEmbeddingProvider>());
    IdentityMockLlm llm;
    PreferenceChain chain(g, hp, llm);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(chain.decide_all(query_from_record(rs[i++ % rs.size()])));
    }
}
BENCHMARK(BM_DecideAll)->Arg(100)->Arg(1000);

static void BM_NormalizeScores(benchmark::State &state) {
    const auto durations = schema::duration_minutes();
    const std::vector<double> scores = {0.3, 1.2, 0.0, 0.7, 0.01, 2.5};
    for (auto _ : state) {
        benchmark::DoNotOptimize(normalize_scores(durations, scores, 1e-6));
    }
}
BENCHMARK(BM_NormalizeScores);

BENCHMARK_MAIN();
