#include "prefchain/retrieval.hpp"

#include "prefchain/error.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>

namespace prefchain {

int circular_hour_distance(int a, int b) noexcept {
    const int d = std::abs(((a - b) % 24 + 24) % 24);
    return std::min(d, 24 - d);
}

double temporal_proximity(int query_hour, int recorded_hour, double tau) {
    if (!(tau > 0.0)) {
        throw InvalidArgument(fmt::format("temporal proximity tau must be positive, got {}", tau));
    }
    return std::exp(-static_cast<double>(circular_hour_distance(query_hour, recorded_hour)) / tau);
}

std::vector<SimilarPerson> top_k_similar(const BehaviorGraph &graph, const QueryAgent &agent,
                                         std::size_t k, EmbeddingProvider &provider) {
    if (k == 0) {
        throw InvalidArgument("top_k_similar requires k >= 1");
    }
    const auto persons = graph.nodes_of_kind(NodeKind::Person);
    if (persons.empty()) {
        throw EmptyGraph("behavior graph has no person nodes");
    }
    const EmbeddingVector query = provider.embed(profile_to_text(agent.profile));
    std::vector<SimilarPerson> scored;
    scored.reserve(persons.size());
    for (NodeId id : persons) {
        scored.push_back({id, similarity_weight(query, provider.embed(graph.node(id).label))});
    }
    const std::size_t keep = std::min(k, scored.size());
    auto by_weight = [](const SimilarPerson &a, const SimilarPerson &b) {
        if (a.weight != b.weight) {
            return a.weight > b.weight;
        }
        return a.person < b.person;
    };
    std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep),
                      scored.end(), by_weight);
    scored.resize(keep);
    return scored;
}

namespace {

bool followed(EdgeKind kind) noexcept { return kind != EdgeKind::SimilarTo; }

void search(const BehaviorGraph &graph, NodeId node, std::size_t depth, std::size_t max_depth,
            std::vector<std::size_t> &best_depth) {
    best_depth[node.value] = depth;
    if (depth == max_depth) {
        return;
    }
    for (const Edge &edge : graph.out_edges(node)) {
        if (!followed(edge.kind)) {
            continue;
        }
        if (depth + 1 < best_depth[edge.target.value]) {
            search(graph, edge.target, depth + 1, max_depth, best_depth);
        }
    }
}

} // namespace

BehavioralSubgraph extract_subgraph(const BehaviorGraph &graph, const QueryAgent &agent,
                                    std::span<const SimilarPerson> persons,
                                    EmbeddingProvider &provider, std::size_t depth, double tau) {
    if (persons.empty()) {
        throw InvalidArgument("extract_subgraph requires at least one person");
    }
    if (depth == 0) {
        throw InvalidArgument("extract_subgraph requires depth >= 1");
    }
    for (const auto &p : persons) {
        if (!graph.contains(p.person) || graph.node(p.person).kind != NodeKind::Person) {
            throw UnknownNode(fmt::format("node {} is not a person of the graph", p.person.value));
        }
        if (!(p.weight >= 0.0 && p.weight <= 1.0)) {
            throw WeightOutOfRange(fmt::format("similarity weight {} outside [0, 1]", p.weight));
        }
    }

    constexpr std::size_t unreached = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> best_depth(graph.node_count(), unreached);
    for (const auto &p : persons) {
        // Each person starts its own traversal at depth 0.
        search(graph, p.person, 0, depth, best_depth);
    }

    BehavioralSubgraph sub;
    for (const auto &set : graph.choice_sets()) {
        sub.graph.register_choice_set(set);
    }
    Attributes agent_attrs = agent.profile.to_attributes();
    agent_attrs.emplace(std::string(schema::kTripPurpose), agent.desire.trip_purpose);
    agent_attrs.emplace(std::string(schema::kStartTime), std::to_string(agent.desire.start_time));
    sub.agent = sub.graph.add_node(NodeKind::Agent, profile_to_text(agent.profile),
                                   std::move(agent_attrs));
    sub.source_ids.push_back(std::nullopt);

    std::vector<std::optional<NodeId>> local(graph.node_count());
    for (const Node &node : graph.nodes()) {
        if (best_depth[node.id.value] == unreached) {
            continue;
        }
        local[node.id.value] = sub.graph.add_node(node.kind, node.label, node.attributes);
        sub.source_ids.push_back(node.id);
    }

    const EmbeddingVector query_desire = provider.embed(desire_to_text(agent.desire));
    for (const auto &p : persons) {
        const NodeId person = *local[p.person.value];
        if (std::any_of(sub.persons.begin(), sub.persons.end(),
                        [&](const SimilarPerson &s) { return s.person == person; })) {
            continue;
        }
        sub.graph.add_edge(sub.agent, person, EdgeKind::SimilarTo, p.weight);
        sub.persons.push_back({person, p.weight});
    }
    for (const Node &node : graph.nodes()) {
        const auto from = local[node.id.value];
        if (!from) {
            continue;
        }
        for (const Edge &edge : graph.out_edges(node.id)) {
            const auto to = local[edge.target.value];
            if (!to || !followed(edge.kind)) {
                continue;
            }
            double weight = edge.weight;
            if (edge.kind == EdgeKind::WantTo) {
                weight = similarity_weight(query_desire,
                                           provider.embed(graph.node(edge.target).label));
            } else if (edge.kind == EdgeKind::ChooseTo && edge.recorded_hour) {
                weight = temporal_proximity(agent.desire.start_time, *edge.recorded_hour, tau);
            }
            sub.graph.add_edge(*from, *to, edge.kind, weight, edge.recorded_hour);
        }
    }
    return sub;
}

} // namespace prefchain
