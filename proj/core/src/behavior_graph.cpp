#include "prefchain/behavior_graph.hpp"

#include "prefchain/embedding.hpp"
#include "prefchain/error.hpp"

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <tuple>

namespace prefchain {

namespace {

constexpr std::array<std::string_view, 4> kNodeKindNames = {"Agent", "Person", "Desire",
                                                            "Intention"};
constexpr std::array<std::string_view, 4> kEdgeKindNames = {"RelativeOf", "SimilarTo", "WantTo",
                                                            "ChooseTo"};

} // namespace

std::string_view to_string(NodeKind kind) { return kNodeKindNames[static_cast<int>(kind)]; }
std::string_view to_string(EdgeKind kind) { return kEdgeKindNames[static_cast<int>(kind)]; }

NodeKind parse_node_kind(std::string_view text) {
    for (std::size_t i = 0; i < kNodeKindNames.size(); ++i) {
        if (kNodeKindNames[i] == text) {
            return static_cast<NodeKind>(i);
        }
    }
    throw UnknownKey(fmt::format("unknown node kind '{}'", text));
}

EdgeKind parse_edge_kind(std::string_view text) {
    for (std::size_t i = 0; i < kEdgeKindNames.size(); ++i) {
        if (kEdgeKindNames[i] == text) {
            return static_cast<EdgeKind>(i);
        }
    }
    throw UnknownKey(fmt::format("unknown edge kind '{}'", text));
}

bool endpoint_kinds_allowed(EdgeKind kind, NodeKind source, NodeKind target) noexcept {
    switch (kind) {
    case EdgeKind::SimilarTo:
        return source == NodeKind::Agent && target == NodeKind::Person;
    case EdgeKind::RelativeOf:
        return source == NodeKind::Person && target == NodeKind::Person;
    case EdgeKind::WantTo:
        return (source == NodeKind::Person || source == NodeKind::Agent) &&
               target == NodeKind::Desire;
    case EdgeKind::ChooseTo:
        return source == NodeKind::Desire && target == NodeKind::Intention;
    }
    return false;
}

NodeId BehaviorGraph::add_node(NodeKind kind, std::string label, Attributes attributes) {
    if (label.empty()) {
        throw InvalidArgument(fmt::format("{} node with empty label", to_string(kind)));
    }
    if (kind == NodeKind::Intention) {
        const ChoiceCategorySet *owner = nullptr;
        if (auto it = attributes.find(std::string(kChoiceSetAttribute)); it != attributes.end()) {
            owner = find_choice_set(it->second);
            if (owner == nullptr || !owner->contains(label)) {
                throw InvalidArgument(fmt::format("intention '{}' is not an option of '{}'",
                                                  label, it->second));
            }
        } else {
            for (const auto &set : choice_sets_) {
                if (set.contains(label)) {
                    owner = &set;
                    break;
                }
            }
            if (owner == nullptr) {
                throw InvalidArgument(
                    fmt::format("intention '{}' is not in any registered choice set", label));
            }
            attributes.emplace(std::string(kChoiceSetAttribute), owner->name());
        }
        auto key = std::make_pair(owner->name(), label);
        if (intentions_.contains(key)) {
            throw InvalidArgument(
                fmt::format("duplicate intention '{}' in '{}'", label, owner->name()));
        }
        intentions_.emplace(std::move(key), NodeId{static_cast<std::uint32_t>(nodes_.size())});
    }
    NodeId id{static_cast<std::uint32_t>(nodes_.size())};
    nodes_.push_back(Node{id, kind, std::move(label), std::move(attributes)});
    out_edges_.emplace_back();
    return id;
}

void BehaviorGraph::add_edge(NodeId source, NodeId target, EdgeKind kind, double weight,
                             std::optional<int> recorded_hour) {
    if (!contains(source) || !contains(target)) {
        throw UnknownNode(fmt::format("edge {} -> {} references a missing node", source.value,
                                      target.value));
    }
    if (!(weight >= 0.0 && weight <= 1.0)) {
        throw WeightOutOfRange(fmt::format("edge weight {} outside [0, 1]", weight));
    }
    const NodeKind from = nodes_[source.value].kind;
    const NodeKind to = nodes_[target.value].kind;
    if (!endpoint_kinds_allowed(kind, from, to)) {
        throw KindMismatch(fmt::format("{} edge cannot join {} -> {}", to_string(kind),
                                       to_string(from), to_string(to)));
    }
    out_edges_[source.value].push_back(Edge{source, target, kind, weight, recorded_hour});
    ++edge_count_;
}

void BehaviorGraph::register_choice_set(ChoiceCategorySet set) {
    if (find_choice_set(set.name()) != nullptr) {
        return;
    }
    choice_sets_.push_back(std::move(set));
}

const ChoiceCategorySet *BehaviorGraph::find_choice_set(std::string_view name) const {
    for (const auto &set : choice_sets_) {
        if (set.name() == name) {
            return &set;
        }
    }
    return nullptr;
}

NodeId BehaviorGraph::intention(std::string_view choice_set, std::string_view option) {
    if (auto existing = find_intention(choice_set, option)) {
        return *existing;
    }
    return add_node(NodeKind::Intention, std::string(option),
                    {{std::string(kChoiceSetAttribute), std::string(choice_set)}});
}

std::optional<NodeId> BehaviorGraph::find_intention(std::string_view choice_set,
                                                    std::string_view option) const {
    auto it = intentions_.find(std::make_pair(std::string(choice_set), std::string(option)));
    if (it == intentions_.end()) {
        return std::nullopt;
    }
    return it->second;
}

const Node &BehaviorGraph::node(NodeId id) const {
    if (!contains(id)) {
        throw UnknownNode(fmt::format("node {} does not exist", id.value));
    }
    return nodes_[id.value];
}

std::span<const Edge> BehaviorGraph::out_edges(NodeId id) const {
    if (!contains(id)) {
        throw UnknownNode(fmt::format("node {} does not exist", id.value));
    }
    return out_edges_[id.value];
}

std::size_t BehaviorGraph::count(NodeKind kind) const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [&](const Node &n) { return n.kind == kind; }));
}

std::size_t BehaviorGraph::count(EdgeKind kind) const {
    std::size_t total = 0;
    for (const auto &edges : out_edges_) {
        total += static_cast<std::size_t>(std::count_if(
            edges.begin(), edges.end(), [&](const Edge &e) { return e.kind == kind; }));
    }
    return total;
}

std::vector<NodeId> BehaviorGraph::nodes_of_kind(NodeKind kind) const {
    std::vector<NodeId> out;
    for (const auto &n : nodes_) {
        if (n.kind == kind) {
            out.push_back(n.id);
        }
    }
    return out;
}

BehaviorGraph build_from_records(std::span<const TripRecord> records,
                                 const GraphBuildConfig &config) {
    BehaviorGraph graph;
    for (const auto &set : config.choice_sets) {
        graph.register_choice_set(set);
    }

    using PersonKey = std::pair<AgentProfile, std::optional<std::string>>;
    std::map<PersonKey, NodeId> persons;
    std::map<std::pair<NodeId, Desire>, NodeId> desires;
    std::map<std::string, std::vector<NodeId>> households;

    for (std::size_t i = 0; i < records.size(); ++i) {
        const TripRecord &record = records[i];
        record.validate(i + 1);

        PersonKey key{record.profile, record.household_id};
        auto person_it = persons.find(key);
        if (person_it == persons.end()) {
            Attributes attrs = record.profile.to_attributes();
            if (record.household_id) {
                attrs.emplace(std::string(schema::kHouseholdId), *record.household_id);
            }
            NodeId person =
                graph.add_node(NodeKind::Person, profile_to_text(record.profile), std::move(attrs));
            person_it = persons.emplace(std::move(key), person).first;
            if (record.household_id) {
                households[*record.household_id].push_back(person);
            }
        }
        const NodeId person = person_it->second;

        auto desire_it = desires.find({person, record.desire});
        if (desire_it == desires.end()) {
            NodeId desire = graph.add_node(
                NodeKind::Desire, desire_to_text(record.desire),
                {{std::string(schema::kTripPurpose), record.desire.trip_purpose},
                 {std::string(schema::kStartTime), std::to_string(record.desire.start_time)}});
            graph.add_edge(person, desire, EdgeKind::WantTo, 1.0);
            desire_it = desires.emplace(std::make_pair(person, record.desire), desire).first;
        }
        const NodeId desire = desire_it->second;

        for (const auto &set : config.choice_sets) {
            const std::string &option = record.choice(set.name());
            if (!set.contains(option)) {
                throw SchemaViolation(i + 1, set.name(), option);
            }
            graph.add_edge(desire, graph.intention(set.name(), option), EdgeKind::ChooseTo, 1.0,
                           record.desire.start_time);
        }
    }

    for (const auto &[household, members] : households) {
        for (NodeId a : members) {
            for (NodeId b : members) {
                if (a != b) {
                    graph.add_edge(a, b, EdgeKind::RelativeOf, config.relative_weight);
                }
            }
        }
    }
    return graph;
}

void write_snapshot(const BehaviorGraph &graph, std::ostream &out) {
    for (const auto &set : graph.choice_sets()) {
        nlohmann::json line = {{"type", "choice_set"}, {"name", set.name()},
                               {"options", set.options()}};
        out << line.dump() << '\n';
    }
    for (const auto &node : graph.nodes()) {
        nlohmann::json line = {{"type", "node"},
                               {"id", node.id.value},
                               {"kind", to_string(node.kind)},
                               {"label", node.label},
                               {"attributes", node.attributes}};
        out << line.dump() << '\n';
    }
    for (const auto &node : graph.nodes()) {
        for (const auto &edge : graph.out_edges(node.id)) {
            nlohmann::json line = {{"type", "edge"},
                                   {"source", edge.source.value},
                                   {"target", edge.target.value},
                                   {"kind", to_string(edge.kind)},
                                   {"weight", edge.weight}};
            if (edge.recorded_hour) {
                line["recorded_hour"] = *edge.recorded_hour;
            }
            out << line.dump() << '\n';
        }
    }
}

BehaviorGraph read_snapshot(std::istream &in) {
    BehaviorGraph graph;
    std::string text;
    std::size_t line_no = 0;
    while (std::getline(in, text)) {
        ++line_no;
        if (text.empty()) {
            continue;
        }
        try {
            const auto line = nlohmann::json::parse(text);
            const auto type = line.at("type").get<std::string>();
            if (type == "choice_set") {
                graph.register_choice_set(
                    ChoiceCategorySet(line.at("name").get<std::string>(),
                                      line.at("options").get<std::vector<std::string>>()));
            } else if (type == "node") {
                const auto expected = static_cast<std::uint32_t>(graph.node_count());
                if (line.at("id").get<std::uint32_t>() != expected) {
                    throw DataError(fmt::format("node id out of order (expected {})", expected));
                }
                graph.add_node(parse_node_kind(line.at("kind").get<std::string>()),
                               line.at("label").get<std::string>(),
                               line.at("attributes").get<Attributes>());
            } else if (type == "edge") {
                std::optional<int> hour;
                if (line.contains("recorded_hour")) {
                    hour = line.at("recorded_hour").get<int>();
                }
                graph.add_edge(NodeId{line.at("source").get<std::uint32_t>()},
                               NodeId{line.at("target").get<std::uint32_t>()},
                               parse_edge_kind(line.at("kind").get<std::string>()),
                               line.at("weight").get<double>(), hour);
            } else {
                throw DataError(fmt::format("unknown record type '{}'", type));
            }
        } catch (const Error &e) {
            throw DataError(fmt::format("graph snapshot line {}: {}", line_no, e.what()));
        } catch (const nlohmann::json::exception &e) {
            throw DataError(fmt::format("graph snapshot line {}: {}", line_no, e.what()));
        }
    }
    return graph;
}

} // namespace prefchain
