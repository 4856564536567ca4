#include <prefchain/city.hpp>
#include <prefchain/ingest.hpp>
#include <prefchain/llm_remodel.hpp>
#include <prefchain/mobility_sim.hpp>
#include <prefchain/pipeline.hpp>

#include <benchmark/benchmark.h>

using namespace prefchain;

static void BM_ShortestPath(benchmark::State &state) {
    GridCityOptions opts;
    opts.width = opts.height = static_cast<std::size_t>(state.range(0));
    const auto city = generate_grid_city(opts);
    const std::size_t last = city.nodes().size() - 1;
    for (auto _ : state) {
        benchmark::DoNotOptimize(city.shortest_path(0, last));
    }
}
BENCHMARK(BM_ShortestPath)->Arg(10)->Arg(30)->Arg(60);

static void BM_RunDay(benchmark::State &state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    auto spec = default_synthetic_spec();
    spec.population = 500;
    spec.seed = 3;
    const auto g = build_from_records(generate_synthetic(spec));
    CachingEmbeddingProvider hp(std::make_shared<HashEmbeddingProvider>());
    IdentityMockLlm llm;
    PreferenceChain chain(g, hp, llm);
    const auto city = generate_grid_city();
    const auto profiles = generate_profiles(n, spec, 11);
    TemplateScheduleProvider schedules;
    std::vector<DayPlan> plans;
    for (std::size_t i = 0; i < n; ++i) {
        plans.push_back(generate_schedule(profiles[i], schedules, 11, i));
    }
    const auto agents = init_agents(profiles, city, 11);
    SimulationOptions opts;
    opts.seed = 11;
    for (auto _ : state) {
        benchmark::DoNotOptimize(run_day(agents, plans, city, chain, llm, opts));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RunDay)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
