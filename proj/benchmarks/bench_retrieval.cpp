#include <prefchain/behavior_graph.hpp>
#include <prefchain/embedding.hpp>
#include <prefchain/ingest.hpp>
#include <prefchain/pipeline.hpp>
#include <prefchain/retrieval.hpp>

#include <benchmark/benchmark.h>

using namespace prefchain;

namespace {

std::vector<TripRecord> records(std::size_t n) {
    auto spec = default_synthetic_spec();
    spec.population = n;
    spec.seed = 23;
    return generate_synthetic(spec);
}

} // namespace

static void BM_BuildGraph(benchmark::State &state) {
    const auto rs = records(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_from_records(rs));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildGraph)->Arg(100)->Arg(1000)->Arg(10000);

static void BM_HashEmbed(benchmark::State &state) {
    const auto text = profile_to_text(records(1).front().profile);
    for (auto _ : state) {
        benchmark::DoNotOptimize(hash_embed(text));
    }
}
BENCHMARK(BM_HashEmbed);

static void BM_TopK(benchmark::State &state) {
    const auto rs = records(static_cast<std::size_t>(state.range(0)));
    const auto g = build_from_records(rs);
    CachingEmbeddingProvider hp(std::make_shared<HashEmbeddingProvider>());
    const auto agent = query_from_record(rs.front());
    for (auto _ : state) {
        benchmark::DoNotOptimize(top_k_similar(g, agent, 5, hp));
    }
}
BENCHMARK(BM_TopK)->Arg(100)->Arg(1000)->Arg(10000);

static void BM_ExtractSubgraph(benchmark::State &state) {
    const auto rs = records(1000);
    const auto g = build_from_records(rs);
    CachingEmbeddingProvider hp(std::make_shared<HashEmbeddingProvider>());
    const auto agent = query_from_record(rs.front());
    const auto persons = top_k_similar(g, agent, static_cast<std::size_t>(state.range(0)), hp);
    for (auto _ : state) {
        benchmark::DoNotOptimize(extract_subgraph(g, agent, persons, hp));
    }
}
BENCHMARK(BM_ExtractSubgraph)->Arg(1)->Arg(5)->Arg(20);

BENCHMARK_MAIN();
