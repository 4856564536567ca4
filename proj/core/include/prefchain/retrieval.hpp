#pragma once

#include "prefchain/behavior_graph.hpp"
#include "prefchain/embedding.hpp"
#include "prefchain/schema.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace prefchain {

/// The simulated agent a prediction is made for.
struct QueryAgent {
    AgentProfile profile;
    Desire desire;
    /// Free-text conditions (weather, city, ...). May be empty.
    std::string context;
};

struct SimilarPerson {
    NodeId person;
    double weight = 0.0;

    friend bool operator==(const SimilarPerson &, const SimilarPerson &) = default;
};

/// Agent-rooted subgraph used for path scoring.
///
/// `graph` has its own node ids: the agent is node 0, the remaining nodes
/// follow in ascending order of their id in the source graph. All weights are
/// final (no placeholders).
struct BehavioralSubgraph {
    BehaviorGraph graph;
    NodeId agent;
    /// Retrieved persons, in local ids, with their similarity weight.
    std::vector<SimilarPerson> persons;
    /// local id -> source graph id; the agent has no source id.
    std::vector<std::optional<NodeId>> source_ids;
};

/// Circular distance between two hours of the day, in [0, 12].
int circular_hour_distance(int a, int b) noexcept;

/// exp(-distance / tau), the ChooseTo weight for a recorded trip hour relative
/// to the querying desire's hour.
double temporal_proximity(int query_hour, int recorded_hour, double tau = 4.0);

inline constexpr std::size_t kDefaultTopK = 5;
inline constexpr std::size_t kDefaultSearchDepth = 3;
inline constexpr double kDefaultTau = 4.0;

/// Persons most similar to the agent's profile text, sorted by weight
/// descending then node id ascending. Throws EmptyGraph when there are no
/// persons, InvalidArgument when k == 0.
std::vector<SimilarPerson> top_k_similar(const BehaviorGraph &graph, const QueryAgent &agent,
                                         std::size_t k, EmbeddingProvider &provider);

/// Depth-limited forward search (RelativeOf, WantTo, ChooseTo edges) from each
/// retrieved person; returns the induced subgraph plus the agent node.
///
/// A node reached again at a shallower depth is re-expanded, so the node set
/// equals the set reachable within `depth` edges. Throws UnknownNode when a
/// listed id is not a Person of `graph`, InvalidArgument for empty input or
/// depth == 0.
BehavioralSubgraph extract_subgraph(const BehaviorGraph &graph, const QueryAgent &agent,
                                    std::span<const SimilarPerson> persons,
                                    EmbeddingProvider &provider,
                                    std::size_t depth = kDefaultSearchDepth,
                                    double tau = kDefaultTau);

} // namespace prefchain
