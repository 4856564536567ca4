#include <prefchain/error.hpp>
#include <prefchain/ingest.hpp>
#include <prefchain/preference.hpp>

#include <gtest/gtest.h>

#include "oracles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numeric>
#include <tuple>

using namespace prefchain;

namespace {

/// Agent -> p1 -> ... chain whose edge kinds follow the canonical layout.
struct Chain {
    BehavioralSubgraph sub;
    NodeId intention;
};

Chain chain(double sim, double want, double choice, std::string option = "walking") {
    Chain c;
    auto &g = c.sub.graph;
    g.register_choice_set(schema::primary_mode());
    c.sub.agent = g.add_node(NodeKind::Agent, "agent");
    auto p = g.add_node(NodeKind::Person, "p");
    auto d = g.add_node(NodeKind::Desire, "d");
    c.intention = g.intention("primary_mode", option);
    g.add_edge(c.sub.agent, p, EdgeKind::SimilarTo, sim);
    g.add_edge(p, d, EdgeKind::WantTo, want);
    g.add_edge(d, c.intention, EdgeKind::ChooseTo, choice);
    return c;
}

// All simple paths by plain recursion over adjacency, as node sequences.
std::vector<std::pair<std::vector<NodeId>, double>> all_paths(const BehaviorGraph &g, NodeId from,
                                                              NodeId to, std::size_t max_edges) {
    std::vector<std::pair<std::vector<NodeId>, double>> out;
    std::vector<NodeId> stack{from};
    std::function<void(double)> walk = [&](double w) {
        const NodeId at = stack.back();
        if (at == to && stack.size() > 1) {
            out.emplace_back(stack, w);
            return;
        }
        if (stack.size() - 1 == max_edges) {
            return;
        }
        for (const auto &e : g.out_edges(at)) {
            if (std::find(stack.begin(), stack.end(), e.target) != stack.end()) {
                continue;
            }
            stack.push_back(e.target);
            walk(w * e.weight);
            stack.pop_back();
        }
    };
    walk(1.0);
    return out;
}

} // namespace

TEST(EnumeratePaths, SingleChain) {
    auto c = chain(0.9, 0.8, 0.7);
    auto paths = enumerate_paths(c.sub, c.intention);
    ASSERT_EQ(paths.size(), 1u);
    EXPECT_NEAR(paths[0].weight, 0.504, 1e-15);
    EXPECT_EQ(paths[0].edges.size(), 3u);
    EXPECT_EQ(paths[0].nodes().front(), c.sub.agent);
    EXPECT_EQ(paths[0].nodes().back(), c.intention);
}

TEST(EnumeratePaths, FourFactorRelativeChain) {
    // agent -SimilarTo 0.9-> p1 -RelativeOf 1.0-> p2 -WantTo 0.8-> d -ChooseTo 0.5-> i
    BehavioralSubgraph sub;
    auto &g = sub.graph;
    g.register_choice_set(schema::primary_mode());
    sub.agent = g.add_node(NodeKind::Agent, "agent");
    auto p1 = g.add_node(NodeKind::Person, "p1");
    auto p2 = g.add_node(NodeKind::Person, "p2");
    auto d = g.add_node(NodeKind::Desire, "d");
    auto i = g.intention("primary_mode", "biking");
    g.add_edge(sub.agent, p1, EdgeKind::SimilarTo, 0.9);
    g.add_edge(p1, p2, EdgeKind::RelativeOf, 1.0);
    g.add_edge(p2, d, EdgeKind::WantTo, 0.8);
    g.add_edge(d, i, EdgeKind::ChooseTo, 0.5);
    auto paths = enumerate_paths(sub, i, 4);
    ASSERT_EQ(paths.size(), 1u);
    EXPECT_NEAR(paths[0].weight, 0.36, 1e-15);
    EXPECT_TRUE(enumerate_paths(sub, i, 3).empty());
}

TEST(EnumeratePaths, NotAnIntention) {
    auto c = chain(0.9, 0.8, 0.7);
    EXPECT_THROW(enumerate_paths(c.sub, NodeId{1}), NotAnIntention);
    EXPECT_THROW(enumerate_paths(c.sub, NodeId{42}), Error);
}

TEST(EnumeratePaths, MatchesRecursiveOracleOnRandomGraphs) {
    Rng rng(2024);
    const auto set = schema::primary_mode();
    for (int t = 0; t < 300; ++t) {
        auto sub = oracle::random_subgraph(rng, set, 10);
        const std::size_t k = 2 + static_cast<std::size_t>(t % 4);
        for (auto i : sub.graph.nodes_of_kind(NodeKind::Intention)) {
            auto got = enumerate_paths(sub, i, k);
            auto want = all_paths(sub.graph, sub.agent, i, k);
            std::stable_sort(want.begin(), want.end(),
                      [](const auto &a, const auto &b) { return a.first < b.first; });
            ASSERT_EQ(got.size(), want.size());
            double sum = 0;
            for (std::size_t j = 0; j < got.size(); ++j) {
                EXPECT_EQ(got[j].nodes(), want[j].first);
                EXPECT_NEAR(got[j].weight, want[j].second, 1e-15);
                EXPECT_LE(got[j].edges.size(), k);
                auto nodes = got[j].nodes();
                std::sort(nodes.begin(), nodes.end());
                EXPECT_EQ(std::adjacent_find(nodes.begin(), nodes.end()), nodes.end());
                sum += got[j].weight;
            }
            EXPECT_NEAR(raw_score(sub, i, k), sum, 1e-12);
            EXPECT_NEAR(raw_score(sub, i, k), oracle::brute_force_score(sub.graph, sub.agent, i, k),
                        1e-12);
        }
    }
}

TEST(EnumeratePaths, DeterministicOrder) {
    Rng a(5), b(5);
    const auto set = schema::primary_mode();
    auto s1 = oracle::random_subgraph(a, set);
    auto s2 = oracle::random_subgraph(b, set);
    for (auto i : s1.graph.nodes_of_kind(NodeKind::Intention)) {
        auto x = enumerate_paths(s1, i);
        auto y = enumerate_paths(s2, i);
        ASSERT_EQ(x.size(), y.size());
        for (std::size_t j = 0; j < x.size(); ++j) {
            EXPECT_EQ(x[j].edges, y[j].edges);
        }
    }
}

TEST(RawScore, SumOfDisjointPaths) {
    BehavioralSubgraph sub;
    auto &g = sub.graph;
    g.register_choice_set(schema::primary_mode());
    sub.agent = g.add_node(NodeKind::Agent, "agent");
    auto p1 = g.add_node(NodeKind::Person, "p1");
    auto p2 = g.add_node(NodeKind::Person, "p2");
    auto d1 = g.add_node(NodeKind::Desire, "d1");
    auto d2 = g.add_node(NodeKind::Desire, "d2");
    auto i = g.intention("primary_mode", "walking");
    g.add_edge(sub.agent, p1, EdgeKind::SimilarTo, 0.9);
    g.add_edge(p1, d1, EdgeKind::WantTo, 0.8);
    g.add_edge(d1, i, EdgeKind::ChooseTo, 0.7);
    g.add_edge(sub.agent, p2, EdgeKind::SimilarTo, 0.9);
    g.add_edge(p2, d2, EdgeKind::WantTo, 0.8);
    g.add_edge(d2, i, EdgeKind::ChooseTo, 0.5);
    EXPECT_NEAR(raw_score(sub, i), 0.864, 1e-15);
    auto unreachable = g.intention("primary_mode", "biking");
    EXPECT_EQ(raw_score(sub, unreachable), 0.0);
}

TEST(PriorDistribution, NormalizesScores) {
    const auto set = schema::primary_mode();
    auto d = normalize_scores(set, {2.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0});
    EXPECT_DOUBLE_EQ(d.at("walking"), 0.5);
    EXPECT_DOUBLE_EQ(d.at("biking"), 0.25);
    EXPECT_DOUBLE_EQ(d.at("public_transit"), 0.25);
    EXPECT_EQ(d.at("private_auto"), 0.0);
    EXPECT_FALSE(d.degenerate());
    EXPECT_THROW(d.at("flying"), UnknownKey);
}

TEST(PriorDistribution, AllZeroIsDegenerateUniform) {
    const auto set = schema::primary_mode();
    auto d = normalize_scores(set, std::vector<double>(7, 0.0));
    EXPECT_TRUE(d.degenerate());
    for (double p : d.probabilities()) {
        EXPECT_DOUBLE_EQ(p, 1.0 / 7.0);
    }
    // Epsilon alone is not degenerate.
    auto e = normalize_scores(set, std::vector<double>(7, 0.0), 0.1);
    EXPECT_FALSE(e.degenerate());
    EXPECT_NEAR(e.at("walking"), 1.0 / 7.0, 1e-15);
}

TEST(PriorDistribution, ZeroPathOptionsGetZero) {
    auto c = chain(0.9, 0.8, 0.7, "biking");
    auto d = prior_distribution(c.sub, schema::primary_mode());
    EXPECT_DOUBLE_EQ(d.at("biking"), 1.0);
    EXPECT_EQ(d.at("walking"), 0.0);
    auto smoothed = prior_distribution(c.sub, schema::primary_mode(), 4, 0.01);
    EXPECT_GT(smoothed.at("walking"), 0.0);
}

TEST(PriorDistribution, ConstructorChecks) {
    const auto set = schema::primary_mode();
    EXPECT_THROW(PreferenceDistribution(set, {1.0}), InvalidArgument);
    EXPECT_THROW(PreferenceDistribution(set, {0.5, 0.5, 0.1, 0, 0, 0, -0.1}), InvalidArgument);
    EXPECT_THROW(PreferenceDistribution(set, {0.5, 0.4, 0, 0, 0, 0, 0}), InvalidArgument);
}

TEST(PriorDistribution, MatchesBruteForceOnSyntheticGraph) {
    auto spec = default_synthetic_spec();
    spec.population = 50;
    spec.seed = 9;
    auto rs = generate_synthetic(spec);
    auto g = build_from_records(rs);
    HashEmbeddingProvider hp;
    for (std::size_t q = 0; q < 10; ++q) {
        QueryAgent agent{rs[q * 5].profile, rs[q * 3].desire, ""};
        auto persons = top_k_similar(g, agent, 5, hp);
        auto sub = extract_subgraph(g, agent, persons, hp);
        for (const auto &set : g.choice_sets()) {
            for (double eps : {0.0, 1e-3}) {
                auto d = prior_distribution(sub, set, 4, eps);
                auto want = oracle::brute_force_prior(sub, set, 4, eps);
                for (std::size_t i = 0; i < set.size(); ++i) {
                    EXPECT_NEAR(d.probabilities()[i], want[i], 1e-9);
                }
                const double total =
                    std::accumulate(d.probabilities().begin(), d.probabilities().end(), 0.0);
                EXPECT_NEAR(total, 1.0, 1e-9);
            }
        }
    }
}

TEST(PriorDistribution, LayerScalingLeavesPriorUnchanged) {
    Rng rng(77);
    for (int t = 0; t < 50; ++t) {
        // Two persons, each with several desire -> intention chains.
        BehavioralSubgraph base;
        auto &g = base.graph;
        g.register_choice_set(schema::primary_mode());
        base.agent = g.add_node(NodeKind::Agent, "agent");
        std::vector<std::tuple<NodeId, NodeId, EdgeKind, double>> edges;
        std::vector<NodeId> intentions;
        const auto modes = schema::primary_mode();
        for (const auto &o : modes.options()) {
            intentions.push_back(g.intention("primary_mode", o));
        }
        for (int p = 0; p < 2; ++p) {
            auto person = g.add_node(NodeKind::Person, "p");
            edges.emplace_back(base.agent, person, EdgeKind::SimilarTo, rng.uniform());
            for (int k = 0; k < 3; ++k) {
                auto d = g.add_node(NodeKind::Desire, "d");
                edges.emplace_back(person, d, EdgeKind::WantTo, rng.uniform());
                edges.emplace_back(d, intentions[rng.below(7)], EdgeKind::ChooseTo, rng.uniform());
            }
        }
        const double c = 0.05 + 0.95 * rng.uniform();
        const EdgeKind layer = std::array{EdgeKind::SimilarTo, EdgeKind::WantTo,
                                          EdgeKind::ChooseTo}[rng.below(3)];
        BehavioralSubgraph scaled = base;
        for (auto [a, b, kind, w] : edges) {
            base.graph.add_edge(a, b, kind, w);
            scaled.graph.add_edge(a, b, kind, kind == layer ? w * c : w);
        }
        const auto set = schema::primary_mode();
        auto p = prior_distribution(base, set);
        auto q = prior_distribution(scaled, set);
        auto sp = option_scores(base, set);
        auto sq = option_scores(scaled, set);
        for (std::size_t i = 0; i < set.size(); ++i) {
            EXPECT_NEAR(p.probabilities()[i], q.probabilities()[i], 1e-9);
            EXPECT_NEAR(sq[i], sp[i] * c, 1e-12);
        }
    }
}
