#include "prefchain/preference.hpp"

#include "prefchain/error.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace prefchain {

std::vector<NodeId> PathWeight::nodes() const {
    std::vector<NodeId> out;
    if (edges.empty()) {
        return out;
    }
    out.reserve(edges.size() + 1);
    out.push_back(edges.front().source);
    for (const auto &e : edges) {
        out.push_back(e.target);
    }
    return out;
}

PreferenceDistribution::PreferenceDistribution(ChoiceCategorySet choice_set,
                                               std::vector<double> probabilities, bool degenerate)
    : choice_set_(std::move(choice_set)), probabilities_(std::move(probabilities)),
      degenerate_(degenerate) {
    if (probabilities_.size() != choice_set_.size()) {
        throw InvalidArgument(fmt::format("distribution over '{}' has {} values for {} options",
                                          choice_set_.name(), probabilities_.size(),
                                          choice_set_.size()));
    }
    double total = 0.0;
    for (double p : probabilities_) {
        if (!(p >= 0.0)) {
            throw InvalidArgument(fmt::format("negative probability {} in '{}'", p,
                                              choice_set_.name()));
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw InvalidArgument(
            fmt::format("distribution over '{}' sums to {}", choice_set_.name(), total));
    }
}

PreferenceDistribution PreferenceDistribution::uniform(ChoiceCategorySet choice_set,
                                                       bool degenerate) {
    const std::size_t n = choice_set.size();
    return PreferenceDistribution(std::move(choice_set),
                                  std::vector<double>(n, 1.0 / static_cast<double>(n)),
                                  degenerate);
}

double PreferenceDistribution::at(std::string_view option) const {
    auto idx = choice_set_.index_of(option);
    if (!idx) {
        throw UnknownKey(fmt::format("'{}' is not an option of '{}'", option, choice_set_.name()));
    }
    return probabilities_[*idx];
}

std::map<std::string, double> PreferenceDistribution::to_map() const {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < probabilities_.size(); ++i) {
        out.emplace(choice_set_.options()[i], probabilities_[i]);
    }
    return out;
}

namespace {

// Depth-first walk over simple paths from the agent; `visit` is called on
// every path ending at an Intention node.
template <typename Visit> class SimplePathWalker {
public:
    SimplePathWalker(const BehaviorGraph &graph, std::size_t max_edges, Visit visit)
        : graph_(graph), max_edges_(max_edges), on_path_(graph.node_count(), false),
          visit_(std::move(visit)) {}

    void run(NodeId start) {
        on_path_[start.value] = true;
        walk(start, 1.0);
        on_path_[start.value] = false;
    }

private:
    void walk(NodeId node, double weight) {
        if (path_.size() == max_edges_) {
            return;
        }
        const auto edges = graph_.out_edges(node);
        for (std::size_t i = 0; i < edges.size(); ++i) {
            const Edge &edge = edges[i];
            if (on_path_[edge.target.value]) {
                continue;
            }
            const double next = weight * edge.weight;
            path_.push_back(&edge);
            positions_.push_back(i);
            if (graph_.node(edge.target).kind == NodeKind::Intention) {
                visit_(edge.target, next, path_, positions_);
            }
            on_path_[edge.target.value] = true;
            walk(edge.target, next);
            on_path_[edge.target.value] = false;
            path_.pop_back();
            positions_.pop_back();
        }
    }

    const BehaviorGraph &graph_;
    std::size_t max_edges_;
    std::vector<bool> on_path_;
    std::vector<const Edge *> path_;
    std::vector<std::size_t> positions_;
    Visit visit_;
};

void require_intention(const BehavioralSubgraph &subgraph, NodeId intention) {
    if (!subgraph.graph.contains(intention) ||
        subgraph.graph.node(intention).kind != NodeKind::Intention) {
        throw NotAnIntention(
            fmt::format("node {} is not an intention of the subgraph", intention.value));
    }
}

} // namespace

std::vector<PathWeight> enumerate_paths(const BehavioralSubgraph &subgraph, NodeId intention,
                                        std::size_t max_edges) {
    require_intention(subgraph, intention);
    struct Found {
        PathWeight path;
        std::vector<NodeId> nodes;
        std::vector<std::size_t> positions;
    };
    std::vector<Found> found;
    SimplePathWalker walker(subgraph.graph, max_edges,
                            [&](NodeId end, double weight, const std::vector<const Edge *> &path,
                                const std::vector<std::size_t> &positions) {
                                if (end != intention) {
                                    return;
                                }
                                Found f;
                                for (const Edge *e : path) {
                                    f.path.edges.push_back(*e);
                                }
                                f.path.weight = weight;
                                f.nodes = f.path.nodes();
                                f.positions = positions;
                                found.push_back(std::move(f));
                            });
    walker.run(subgraph.agent);
    std::sort(found.begin(), found.end(), [](const Found &a, const Found &b) {
        if (a.nodes != b.nodes) {
            return a.nodes < b.nodes;
        }
        return a.positions < b.positions;
    });
    std::vector<PathWeight> out;
    out.reserve(found.size());
    for (auto &f : found) {
        out.push_back(std::move(f.path));
    }
    return out;
}

double raw_score(const BehavioralSubgraph &subgraph, NodeId intention, std::size_t max_edges) {
    const auto paths = enumerate_paths(subgraph, intention, max_edges);
    return std::accumulate(paths.begin(), paths.end(), 0.0,
                           [](double acc, const PathWeight &p) { return acc + p.weight; });
}

std::vector<double> option_scores(const BehavioralSubgraph &subgraph,
                                  const ChoiceCategorySet &choice_set, std::size_t max_edges) {
    std::vector<double> per_node(subgraph.graph.node_count(), 0.0);
    SimplePathWalker walker(subgraph.graph, max_edges,
                            [&](NodeId end, double weight, const auto &, const auto &) {
                                per_node[end.value] += weight;
                            });
    walker.run(subgraph.agent);

    std::vector<double> scores(choice_set.size(), 0.0);
    for (std::size_t i = 0; i < choice_set.size(); ++i) {
        if (auto node = subgraph.graph.find_intention(choice_set.name(), choice_set.options()[i])) {
            scores[i] = per_node[node->value];
        }
    }
    return scores;
}

PreferenceDistribution normalize_scores(const ChoiceCategorySet &choice_set,
                                        std::vector<double> scores, double epsilon) {
    if (!(epsilon >= 0.0)) {
        throw InvalidArgument(fmt::format("smoothing epsilon {} is negative", epsilon));
    }
    if (scores.size() != choice_set.size()) {
        throw InvalidArgument("score vector does not match the choice set");
    }
    double total = 0.0;
    for (double &s : scores) {
        s += epsilon;
        total += s;
    }
    if (!(total > 0.0)) {
        return PreferenceDistribution::uniform(choice_set, true);
    }
    for (double &s : scores) {
        s /= total;
    }
    return PreferenceDistribution(choice_set, std::move(scores));
}

PreferenceDistribution prior_distribution(const BehavioralSubgraph &subgraph,
                                          const ChoiceCategorySet &choice_set,
                                          std::size_t max_edges, double epsilon) {
    return normalize_scores(choice_set, option_scores(subgraph, choice_set, max_edges), epsilon);
}

} // namespace prefchain
