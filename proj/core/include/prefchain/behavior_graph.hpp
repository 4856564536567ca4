#pragma once

#include "prefchain/schema.hpp"

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace prefchain {

struct NodeId {
    std::uint32_t value = 0;

    friend auto operator<=>(NodeId, NodeId) = default;
};

enum class NodeKind { Agent, Person, Desire, Intention };
enum class EdgeKind { RelativeOf, SimilarTo, WantTo, ChooseTo };

std::string_view to_string(NodeKind kind);
std::string_view to_string(EdgeKind kind);
NodeKind parse_node_kind(std::string_view text);
EdgeKind parse_edge_kind(std::string_view text);

using Attributes = std::map<std::string, std::string>;

/// Attribute key carried by Intention nodes naming their choice set.
inline constexpr std::string_view kChoiceSetAttribute = "choice_set";

struct Node {
    NodeId id;
    NodeKind kind = NodeKind::Person;
    std::string label;
    Attributes attributes;

    friend bool operator==(const Node &, const Node &) = default;
};

struct Edge {
    NodeId source;
    NodeId target;
    EdgeKind kind = EdgeKind::WantTo;
    double weight = 1.0;
    /// ChooseTo edges keep the start hour of the observed trip; their weight is
    /// finalized against the querying desire during subgraph extraction.
    std::optional<int> recorded_hour;

    friend bool operator==(const Edge &, const Edge &) = default;
};

/// True when `kind` may connect a `source`-kind node to a `target`-kind node.
bool endpoint_kinds_allowed(EdgeKind kind, NodeKind source, NodeKind target) noexcept;

/// Weighted directed graph over Agent/Person/Desire/Intention nodes.
///
/// Single writer while building; read-only afterwards, so a built graph can be
/// shared between threads without locking.
class BehaviorGraph {
public:
    /// Throws InvalidArgument for an empty label, or for an Intention whose
    /// label is not an option of a registered choice set.
    NodeId add_node(NodeKind kind, std::string label, Attributes attributes = {});

    /// Throws UnknownNode, WeightOutOfRange (outside [0, 1] or NaN), KindMismatch.
    void add_edge(NodeId source, NodeId target, EdgeKind kind, double weight,
                  std::optional<int> recorded_hour = std::nullopt);

    void register_choice_set(ChoiceCategorySet set);
    const std::vector<ChoiceCategorySet> &choice_sets() const noexcept { return choice_sets_; }
    const ChoiceCategorySet *find_choice_set(std::string_view name) const;

    /// Intention node for an option, created on first use.
    NodeId intention(std::string_view choice_set, std::string_view option);
    std::optional<NodeId> find_intention(std::string_view choice_set,
                                         std::string_view option) const;

    bool contains(NodeId id) const noexcept { return id.value < nodes_.size(); }
    /// Throws UnknownNode.
    const Node &node(NodeId id) const;
    std::span<const Node> nodes() const noexcept { return nodes_; }
    std::span<const Edge> out_edges(NodeId id) const;

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edge_count_; }
    std::size_t count(NodeKind kind) const;
    std::size_t count(EdgeKind kind) const;
    std::vector<NodeId> nodes_of_kind(NodeKind kind) const;

private:
    std::vector<Node> nodes_;
    std::vector<std::vector<Edge>> out_edges_;
    std::size_t edge_count_ = 0;
    std::vector<ChoiceCategorySet> choice_sets_;
    std::map<std::pair<std::string, std::string>, NodeId, std::less<>> intentions_;
};

struct GraphBuildConfig {
    std::vector<ChoiceCategorySet> choice_sets = {schema::primary_mode(),
                                                  schema::duration_minutes()};
    /// Weight of RelativeOf edges between persons sharing a household id.
    double relative_weight = 1.0;
};

/// Builds the behavior graph from reference records.
///
/// One Person per distinct (profile, household id); one Desire per distinct
/// (purpose, start hour) of that person; one ChooseTo edge per record and
/// choice set. WantTo and ChooseTo weights are stored as 1.0 placeholders and
/// are finalized per query by retrieval. Throws SchemaViolation (1-based row).
BehaviorGraph build_from_records(std::span<const TripRecord> records,
                                 const GraphBuildConfig &config = {});

/// Line-oriented JSON snapshot: one choice set, node or edge object per line.
void write_snapshot(const BehaviorGraph &graph, std::ostream &out);
/// Throws DataError on malformed lines or ids out of order.
BehaviorGraph read_snapshot(std::istream &in);

} // namespace prefchain
