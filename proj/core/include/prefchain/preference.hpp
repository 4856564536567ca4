#pragma once

#include "prefchain/behavior_graph.hpp"
#include "prefchain/retrieval.hpp"
#include "prefchain/schema.hpp"

#include <cstddef>
#include <map>
#include <string_view>
#include <vector>

namespace prefchain {

/// A simple agent -> intention path and the product of its edge weights.
struct PathWeight {
    std::vector<Edge> edges;
    double weight = 1.0;

    /// Node sequence, starting at the first edge's source.
    std::vector<NodeId> nodes() const;
};

/// Normalized probabilities over a full choice set, aligned with its options.
class PreferenceDistribution {
public:
    PreferenceDistribution() = default;
    /// Throws InvalidArgument when sizes differ, a value is negative, or the
    /// sum is not 1 within 1e-9.
    PreferenceDistribution(ChoiceCategorySet choice_set, std::vector<double> probabilities,
                           bool degenerate = false);

    static PreferenceDistribution uniform(ChoiceCategorySet choice_set, bool degenerate);

    const ChoiceCategorySet &choice_set() const noexcept { return choice_set_; }
    const std::vector<double> &probabilities() const noexcept { return probabilities_; }
    /// Throws UnknownKey.
    double at(std::string_view option) const;
    /// True when no path reached any option and the uniform fallback was used.
    bool degenerate() const noexcept { return degenerate_; }

    std::map<std::string, double> to_map() const;

private:
    ChoiceCategorySet choice_set_;
    std::vector<double> probabilities_;
    bool degenerate_ = false;
};

inline constexpr std::size_t kDefaultMaxPathEdges = 4;

/// All simple paths from the subgraph's agent to `intention` with at most
/// `max_edges` edges, ordered by node sequence then by edge position for
/// parallel edges. Throws NotAnIntention.
std::vector<PathWeight> enumerate_paths(const BehavioralSubgraph &subgraph, NodeId intention,
                                        std::size_t max_edges = kDefaultMaxPathEdges);

/// Sum of path weights into `intention`; 0 when unreachable.
double raw_score(const BehavioralSubgraph &subgraph, NodeId intention,
                 std::size_t max_edges = kDefaultMaxPathEdges);

/// Raw scores of every option of `choice_set`, aligned with its options.
/// Options without an Intention node in the subgraph score 0.
std::vector<double> option_scores(const BehavioralSubgraph &subgraph,
                                  const ChoiceCategorySet &choice_set,
                                  std::size_t max_edges = kDefaultMaxPathEdges);

/// Normalizes (score + epsilon) over the full choice set. When every smoothed
/// score is 0 the result is uniform and flagged degenerate.
PreferenceDistribution prior_distribution(const BehavioralSubgraph &subgraph,
                                          const ChoiceCategorySet &choice_set,
                                          std::size_t max_edges = kDefaultMaxPathEdges,
                                          double epsilon = 0.0);

/// Normalization step on its own; exposed for callers with precomputed scores.
PreferenceDistribution normalize_scores(const ChoiceCategorySet &choice_set,
                                        std::vector<double> scores, double epsilon = 0.0);

} // namespace prefchain
