#include <prefchain/error.hpp>
#include <prefchain/mobility_sim.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

using namespace prefchain;

namespace {

AgentProfile employed() { return {"25-34", "$50k-$100k", "employed", "2", "one", "bachelors_degree"}; }
AgentProfile pupil() { return {"Under 18", "$50k-$100k", "under_16", "4", "two", "k_12"}; }
AgentProfile retiree() { return {"65+", "$10k-$50k", "not_in_labor_force", "1", "zero", "high_school"}; }

TripRecord walking_record() {
    TripRecord r;
    r.profile = employed();
    r.desire = {"work", 8};
    r.primary_mode = "walking";
    r.duration_minutes = "0-10";
    return r;
}

/// Nodes 0-1-2-3-4 on a line, x = 0, 100, 300, 600, 1000.
/// POIs: 0 shop@1, 1 shop@4, 2 home@0, 3 work@3.
CityModel line_city() {
    std::vector<StreetNode> nodes = {{0, 0, 0}, {1, 100, 0}, {2, 300, 0}, {3, 600, 0}, {4, 1000, 0}};
    std::vector<StreetEdge> edges = {{0, 0, 1, 100}, {1, 1, 2, 200}, {2, 2, 3, 300}, {3, 3, 4, 400}};
    std::vector<Poi> pois = {{0, "shop", 1}, {1, "shop", 4}, {2, "home", 0}, {3, "work", 3}};
    return CityModel(nodes, edges, pois);
}

struct Fixture {
    std::vector<TripRecord> records = {walking_record()};
    BehaviorGraph graph = build_from_records(records);
    HashEmbeddingProvider embedder;
    IdentityMockLlm llm;
};

SyntheticSpec age_spec() {
    SyntheticSpec spec;
    spec.marginals["age_group"] = {{"18-24", 0.3}, {"25-34", 0.3}, {"35-44", 0.2}, {"65+", 0.2}};
    spec.buckets["*"] = {{{"walking", 1.0}}, {{"0-10", 1.0}}, {}};
    return spec;
}

} // namespace

TEST(Profiles, EmptyDeterministicAndFrequency) {
    auto spec = age_spec();
    ASSERT_NO_THROW(spec.validate());
    EXPECT_TRUE(generate_profiles(0, spec, 1).empty());
    auto a = generate_profiles(1000, spec, 1);
    EXPECT_EQ(a, generate_profiles(1000, spec, 1));
    EXPECT_NE(a, generate_profiles(1000, spec, 2));
    double old = 0;
    for (const auto &p : a) {
        old += p.age_group == "65+";
    }
    EXPECT_NEAR(old / 1000.0, 0.2, 0.03);
}

TEST(Schedule, TemplateRules) {
    TemplateScheduleProvider t;
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto plan = generate_schedule(employed(), t, seed);
        EXPECT_NO_THROW(plan.validate());
        ASSERT_FALSE(plan.entries.empty());
        EXPECT_EQ(plan.entries.front().purpose, "work");
        EXPECT_GE(plan.entries.front().hour, 7);
        EXPECT_LT(plan.entries.front().hour, 10);
        EXPECT_EQ(plan.entries.back().purpose, "home");

        auto school = generate_schedule(pupil(), t, seed);
        EXPECT_EQ(school.entries.front().purpose, "school");
        auto other = generate_schedule(retiree(), t, seed);
        EXPECT_NO_THROW(other.validate());
        EXPECT_EQ(other.entries.back().purpose, "home");
    }
    EXPECT_EQ(generate_schedule(employed(), t, 4, 2), generate_schedule(employed(), t, 4, 2));
}

TEST(Schedule, LlmAnswerAndFallback) {
    FixedResponseLlm good(R"(Plan: [{"hour": 9, "purpose": "shop"}, {"hour": 13, "purpose": "home"}])");
    LlmScheduleProvider provider(good);
    auto plan = generate_schedule(retiree(), provider, 3);
    EXPECT_EQ(plan, (DayPlan{{{9, "shop"}, {13, "home"}}}));

    TemplateScheduleProvider t;
    for (const char *bad : {R"([{"hour": 25, "purpose": "shop"}])",
                            R"([{"hour": 9, "purpose": "shop"}, {"hour": 8, "purpose": "home"}])",
                            R"([{"hour": 9, "purpose": "fly"}])", "no idea"}) {
        FixedResponseLlm llm(bad);
        LlmScheduleProvider p(llm);
        EXPECT_EQ(generate_schedule(employed(), p, 5), generate_schedule(employed(), t, 5)) << bad;
    }
}

TEST(Schedule, PlanValidation) {
    EXPECT_THROW((DayPlan{{{8, "work"}, {8, "home"}}}.validate()), InvalidArgument);
    EXPECT_THROW((DayPlan{{{-1, "work"}}}.validate()), InvalidArgument);
    EXPECT_THROW((DayPlan{{{24, "work"}}}.validate()), InvalidArgument);
    EXPECT_THROW(parse_schedule("[1, 2]"), Error);
}

TEST(ChooseMode, SingleRecordGraphReturnsItsMode) {
    Fixture f;
    PreferenceChain chain(f.graph, f.embedder, f.llm);
    AgentState agent(0, retiree(), 0, 0);
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        auto c = choose_mode_and_duration(agent, "shop", 9 + i / 4, chain, rng);
        EXPECT_EQ(c.mode, "walking");
        EXPECT_EQ(c.duration, "0-10");
    }
    EXPECT_EQ(agent.memory().size(), 20u);
    EXPECT_EQ(agent.memory().front().activity, "depart:shop");
}

TEST(ChooseMode, PointMassPosterior) {
    auto spec = default_synthetic_spec();
    spec.population = 50;
    auto rs = generate_synthetic(spec);
    auto g = build_from_records(rs);
    HashEmbeddingProvider hp;
    FixedResponseLlm llm(R"({"biking": 1.0})");
    PreferenceChain chain(g, hp, llm);
    AgentState agent(0, employed(), 0, 0);
    Rng rng(2);
    for (int i = 0; i < 30; ++i) {
        EXPECT_EQ(choose_mode_and_duration(agent, "work", 8, chain, rng).mode, "biking");
    }
}

TEST(ChooseMode, SamplingFrequency) {
    Fixture f;
    FixedResponseLlm llm(R"({"walking": 0.7, "biking": 0.3})");
    PreferenceChain chain(f.graph, f.embedder, llm);
    AgentState agent(0, employed(), 0, 0);
    Rng rng(3);
    int walking = 0;
    for (int i = 0; i < 100; ++i) {
        walking += choose_mode_and_duration(agent, "work", 8, chain, rng).mode == "walking";
    }
    EXPECT_NEAR(walking / 100.0, 0.7, 0.1);
}

TEST(SearchPois, LineCityOracle) {
    auto city = line_city();
    // Walking covers 800 m in the 0-10 bin and 1600 m in 10-20.
    EXPECT_EQ(search_pois(city, 0, "shop", "walking", "0-10"), (std::vector<std::size_t>{0}));
    EXPECT_EQ(search_pois(city, 0, "shop", "walking", "10-20"), (std::vector<std::size_t>{0, 1}));
    // From node 2: shop 0 at 200 m, shop 1 at 700 m.
    EXPECT_EQ(search_pois(city, 2, "shop", "walking", "0-10"), (std::vector<std::size_t>{0, 1}));
    // From node 3: shop 1 at 400 m, shop 0 at 500 m.
    EXPECT_EQ(search_pois(city, 3, "shop", "walking", "0-10"), (std::vector<std::size_t>{1, 0}));
    // From node 4 on foot for 0-10: shop 1 at 0 m only (shop 0 at 900 m).
    EXPECT_EQ(search_pois(city, 4, "shop", "walking", "0-10"), (std::vector<std::size_t>{1}));
    // Home is 1000 m from node 4.
    EXPECT_TRUE(search_pois(city, 4, "home", "walking", "0-10").empty());
    EXPECT_EQ(search_pois(city, 4, "home", "biking", "0-10"), (std::vector<std::size_t>{2}));
}

TEST(SearchPois, EmptyAndUnknown) {
    auto city = line_city();
    EXPECT_EQ(search_pois(city, 4, "work", "walking", "0-10"), (std::vector<std::size_t>{3}));
    EXPECT_THROW(search_pois(city, 0, "school", "walking", "0-10"), UnknownCategory);
    EXPECT_THROW(nearest_poi(city, 0, "school"), UnknownCategory);
    EXPECT_EQ(nearest_poi(city, 3, "shop"), 1u);
    EXPECT_EQ(nearest_poi(city, 2, "shop"), 0u);
}

TEST(SelectPoi, MemoryProviderAndFallback) {
    auto city = line_city();
    AgentState agent(0, employed(), 2, 0);
    FixedResponseLlm never("{\"poi_id\": 1}");
    EXPECT_EQ(select_poi({}, agent, "home", city, never), 2u);
    EXPECT_EQ(never.calls(), 0u);

    FixedResponseLlm second("{\"poi_id\": 1}");
    EXPECT_EQ(select_poi({0, 1}, agent, "shop", city, second), 1u);
    EXPECT_EQ(second.calls(), 1u);
    EXPECT_NE(second.prompts()[0].find("poi_id 1"), std::string::npos);

    FixedResponseLlm invalid("{\"poi_id\": 3}");
    EXPECT_EQ(select_poi({0, 1}, agent, "shop", city, invalid), 0u);
    FixedResponseLlm garbage("the blue one");
    EXPECT_EQ(select_poi({1, 0}, agent, "shop", city, garbage), 1u);
}

TEST(RunDay, HomeOnlyPlanHasNoTraffic) {
    Fixture f;
    PreferenceChain chain(f.graph, f.embedder, f.llm);
    auto city = line_city();
    std::vector<AgentState> agents = {AgentState(0, employed(), 2, 0)};
    auto r = run_day(agents, {DayPlan{{{18, "home"}}}}, city, chain, f.llm, {});
    EXPECT_EQ(r.tally.total_traversals(), 0u);
    EXPECT_EQ(r.tally.total_visits(), 0u);
    EXPECT_TRUE(r.trips.empty());
}

TEST(RunDay, HomeToWorkTracesThreeEdges) {
    Fixture f;
    PreferenceChain chain(f.graph, f.embedder, f.llm);
    auto city = line_city();
    std::vector<AgentState> agents = {AgentState(0, employed(), 2, 0)};
    auto r = run_day(agents, {DayPlan{{{8, "work"}}}}, city, chain, f.llm, {});
    ASSERT_EQ(r.trips.size(), 1u);
    const auto &trip = r.trips[0];
    EXPECT_EQ(trip.mode, "walking");
    EXPECT_EQ(trip.poi, 3u);
    EXPECT_EQ(trip.edges, (std::vector<std::size_t>{0, 1, 2}));
    EXPECT_EQ(trip.depart_minute, 480);
    EXPECT_EQ(trip.arrive_minute, 480 + 8); // ceil(600 / 80)
    for (std::size_t e = 0; e < 4; ++e) {
        for (int h = 0; h < 24; ++h) {
            const std::uint64_t expected = (e < 3 && h == 8) ? 1 : 0;
            EXPECT_EQ(r.tally.edge_counts()[e][h], expected) << e << "@" << h;
        }
    }
    EXPECT_EQ(r.tally.poi_counts()[3][8], 1u);
    EXPECT_EQ(r.tally.total_visits(), 1u);
    EXPECT_EQ(r.agents[0].important("work"), 3u);
}

TEST(RunDay, DeterministicConservedAndMonotone) {
    auto spec = default_synthetic_spec();
    spec.population = 80;
    spec.seed = 21;
    auto rs = generate_synthetic(spec);
    auto g = build_from_records(rs);
    HashEmbeddingProvider hp;
    IdentityMockLlm llm;
    PreferenceChain chain(g, hp, llm);
    auto city = generate_grid_city({8, 8, 100.0, 3, 5});
    auto profiles = generate_profiles(12, spec, 9);
    TemplateScheduleProvider t;
    std::vector<DayPlan> plans;
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        plans.push_back(generate_schedule(profiles[i], t, 9, i));
    }
    auto agents = init_agents(profiles, city, 9);
    SimulationOptions serial{9, 1, {}};
    SimulationOptions wide{9, 4, {}};
    auto a = run_day(agents, plans, city, chain, llm, serial);
    auto b = run_day(agents, plans, city, chain, llm, wide);
    EXPECT_EQ(a.tally, b.tally);
    std::ostringstream ca, cb;
    write_tally_csv(a.tally, ca);
    write_tally_csv(b.tally, cb);
    EXPECT_EQ(ca.str(), cb.str());

    std::uint64_t edges = 0;
    for (const auto &trip : a.trips) {
        edges += trip.edges.size();
        EXPECT_GE(trip.depart_minute, trip.plan_hour * 60);
        EXPECT_GE(trip.arrive_minute, trip.depart_minute);
        EXPECT_EQ(city.pois()[trip.poi].category, trip.purpose);
    }
    EXPECT_EQ(a.tally.total_traversals(), edges);
    EXPECT_EQ(a.tally.total_visits(), a.trips.size());
    for (const auto &agent : a.agents) {
        for (std::size_t i = 1; i < agent.memory().size(); ++i) {
            EXPECT_LE(agent.memory()[i - 1].minute, agent.memory()[i].minute);
        }
    }
}

TEST(AgentState, ClockOnlyMovesForward) {
    AgentState agent(0, employed(), 2, 0);
    EXPECT_EQ(agent.home(), 2u);
    agent.remember({100, "x", 0, "walking"});
    EXPECT_EQ(agent.minute(), 100);
    EXPECT_THROW(agent.remember({50, "y", 0, "walking"}), InvalidArgument);
    agent.move_to(3, 1, 40);
    EXPECT_EQ(agent.minute(), 100);
    EXPECT_EQ(agent.current_node(), 3u);
    EXPECT_EQ(agent.current_poi(), 1u);
}

TEST(Tally, MergeCsvAndErrors) {
    TrafficTally a(3, 2), b(3, 2);
    a.add_traversal(0, 5);
    a.add_traversal(0, 5);
    b.add_traversal(2, 23);
    b.add_visit(1, 7);
    a.merge(b);
    EXPECT_EQ(a.total_traversals(), 3u);
    EXPECT_EQ(a.total_visits(), 1u);
    std::ostringstream out;
    write_tally_csv(a, out);
    EXPECT_EQ(out.str(), "kind,id,hour,count\nedge,0,5,2\nedge,2,23,1\npoi,1,7,1\n");
    std::istringstream in(out.str());
    EXPECT_EQ(read_tally_csv(in, 3, 2), a);
    TrafficTally other(4, 2);
    EXPECT_THROW(a.merge(other), AxisMismatch);
    std::istringstream bad("kind,id,hour,count\nedge,9,5,2\n");
    EXPECT_THROW(read_tally_csv(bad, 3, 2), ParseFailure);
    std::istringstream nan("kind,id,hour,count\nedge,0,5,lots\n");
    EXPECT_THROW(read_tally_csv(nan, 3, 2), ParseFailure);
}

TEST(FlowKld, Examples) {
    TrafficTally a(2, 1), b(2, 1), c(2, 1);
    for (int i = 0; i < 3; ++i) a.add_traversal(0, 8);
    a.add_traversal(1, 9);
    b.add_traversal(0, 1);
    b.add_traversal(0, 2);
    b.add_traversal(1, 3);
    b.add_traversal(1, 4);
    auto same = flow_kld(a, a);
    ASSERT_TRUE(same.traffic);
    EXPECT_NEAR(*same.traffic, 0.0, 1e-9);
    EXPECT_FALSE(same.poi);

    auto toy = flow_kld(a, b);
    const double expected = 0.75 * std::log(0.75 / 0.5) + 0.25 * std::log(0.25 / 0.5);
    EXPECT_NEAR(expected, 0.130812, 1e-6);
    EXPECT_NEAR(*toy.traffic, oracle::reference_kld({3, 1}, {2, 2}, 1e-9), 1e-9);
    EXPECT_NEAR(*toy.traffic, expected, 1e-8);

    c.add_traversal(1, 0);
    auto disjoint = flow_kld(TrafficTally([] {
                                 TrafficTally t(2, 1);
                                 t.add_traversal(0, 0);
                                 return t;
                             }()),
                             c);
    EXPECT_TRUE(std::isfinite(*disjoint.traffic));
    EXPECT_GT(*disjoint.traffic, 10.0);
    EXPECT_THROW(flow_kld(a, TrafficTally(3, 1)), AxisMismatch);
}

TEST(City, GridShortestPathAndRoundTrip) {
    auto city = generate_grid_city({5, 4, 100.0, 2, 3});
    EXPECT_EQ(city.nodes().size(), 20u);
    EXPECT_EQ(city.edges().size(), 4u * 4u + 5u * 3u);
    EXPECT_EQ(city.pois().size(), 2u * 9u);
    auto route = city.shortest_path(0, 19);
    EXPECT_DOUBLE_EQ(route.length, 700.0);
    EXPECT_EQ(route.edges.size(), 7u);
    EXPECT_EQ(route.nodes.front(), 0u);
    EXPECT_EQ(route.nodes.back(), 19u);
    EXPECT_EQ(city.distances_from(0)[19], 700.0);

    std::ostringstream out;
    write_city(city, out);
    std::istringstream in(out.str());
    auto back = read_city(in);
    std::ostringstream again;
    write_city(back, again);
    EXPECT_EQ(out.str(), again.str());
}

TEST(City, Invalid) {
    std::vector<StreetNode> nodes = {{0, 0, 0}, {1, 1, 0}, {2, 2, 0}};
    EXPECT_THROW(CityModel(nodes, {{0, 0, 1, 1.0}}, {}), InvalidCity);            // disconnected
    EXPECT_THROW(CityModel(nodes, {{0, 0, 1, 1.0}, {1, 1, 5, 1.0}}, {}), InvalidCity);
    EXPECT_THROW(CityModel(nodes, {{0, 0, 1, 0.0}, {1, 1, 2, 1.0}}, {}), InvalidCity);
    EXPECT_THROW(CityModel(nodes, {{0, 0, 1, 1.0}, {1, 1, 2, 1.0}}, {{0, "zoo", 1}}), InvalidCity);
    EXPECT_THROW(CityModel(nodes, {{0, 0, 1, 1.0}, {1, 1, 2, 1.0}}, {{0, "shop", 7}}), InvalidCity);
    ModeSpeeds speeds = default_mode_speeds();
    speeds["walking"] = 0.0;
    EXPECT_THROW(CityModel(nodes, {{0, 0, 1, 1.0}, {1, 1, 2, 1.0}}, {}, speeds), InvalidCity);
    EXPECT_THROW(line_city().speed("teleport"), UnknownKey);
}
