#include "prefchain/city.hpp"

#include "prefchain/error.hpp"
#include "prefchain/rng.hpp"
#include "prefchain/schema.hpp"

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <functional>
#include <limits>
#include <queue>

namespace prefchain {

ModeSpeeds default_mode_speeds() {
    return {
        {"walking", 80.0},        {"biking", 250.0},         {"public_transit", 400.0},
        {"private_auto", 500.0},  {"auto_passenger", 500.0}, {"on_demand_auto", 500.0},
        {"other_travel_mode", 80.0},
    };
}

CityModel::CityModel(std::vector<StreetNode> nodes, std::vector<StreetEdge> edges,
                     std::vector<Poi> pois, ModeSpeeds speeds)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), pois_(std::move(pois)),
      speeds_(std::move(speeds)) {
    if (nodes_.empty()) {
        throw InvalidCity("city has no street nodes");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].id != i) {
            throw InvalidCity(fmt::format("node at position {} has id {}", i, nodes_[i].id));
        }
    }
    adjacency_.assign(nodes_.size(), {});
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const auto &e = edges_[i];
        if (e.id != i) {
            throw InvalidCity(fmt::format("edge at position {} has id {}", i, e.id));
        }
        if (e.a >= nodes_.size() || e.b >= nodes_.size()) {
            throw InvalidCity(fmt::format("edge {} references a missing node", e.id));
        }
        if (!(e.length > 0.0)) {
            throw InvalidCity(fmt::format("edge {} has non-positive length", e.id));
        }
        adjacency_[e.a].emplace_back(e.b, e.id);
        adjacency_[e.b].emplace_back(e.a, e.id);
    }
    for (std::size_t i = 0; i < pois_.size(); ++i) {
        const auto &p = pois_[i];
        if (p.id != i) {
            throw InvalidCity(fmt::format("POI at position {} has id {}", i, p.id));
        }
        if (p.node >= nodes_.size()) {
            throw InvalidCity(fmt::format("POI {} is attached to missing node {}", p.id, p.node));
        }
        if (!schema::is_valid(schema::kTripPurpose, p.category)) {
            throw InvalidCity(fmt::format("POI {} has unknown category '{}'", p.id, p.category));
        }
    }
    for (const auto &mode : schema::categories(schema::kPrimaryMode)) {
        auto it = speeds_.find(mode);
        if (it == speeds_.end() || !(it->second > 0.0)) {
            throw InvalidCity(fmt::format("mode '{}' needs a positive speed", mode));
        }
    }
    const auto reach = distances_from(0);
    for (double d : reach) {
        if (d == std::numeric_limits<double>::infinity()) {
            throw InvalidCity("street graph is not connected");
        }
    }
}

double CityModel::speed(std::string_view mode) const {
    auto it = speeds_.find(mode);
    if (it == speeds_.end()) {
        throw UnknownKey(fmt::format("no speed for mode '{}'", mode));
    }
    return it->second;
}

bool CityModel::has_category(std::string_view category) const {
    for (const auto &p : pois_) {
        if (p.category == category) {
            return true;
        }
    }
    return false;
}

std::vector<std::size_t> CityModel::pois_of(std::string_view category) const {
    std::vector<std::size_t> out;
    for (const auto &p : pois_) {
        if (p.category == category) {
            out.push_back(p.id);
        }
    }
    return out;
}

std::vector<double>
CityModel::dijkstra(std::size_t from,
                    std::vector<std::pair<std::size_t, std::size_t>> *parent) const {
    if (from >= nodes_.size()) {
        throw UnknownNode(fmt::format("street node {} does not exist", from));
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    constexpr auto none = std::numeric_limits<std::size_t>::max();
    std::vector<double> dist(nodes_.size(), inf);
    if (parent != nullptr) {
        parent->assign(nodes_.size(), {none, none});
    }
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[from] = 0.0;
    queue.emplace(0.0, from);
    while (!queue.empty()) {
        const auto [d, u] = queue.top();
        queue.pop();
        if (d > dist[u]) {
            continue;
        }
        for (const auto &[v, edge] : adjacency_[u]) {
            const double nd = d + edges_[edge].length;
            if (nd < dist[v]) {
                dist[v] = nd;
                if (parent != nullptr) {
                    (*parent)[v] = {u, edge};
                }
                queue.emplace(nd, v);
            }
        }
    }
    return dist;
}

std::vector<double> CityModel::distances_from(std::size_t from) const {
    return dijkstra(from, nullptr);
}

Route CityModel::shortest_path(std::size_t from, std::size_t to) const {
    if (to >= nodes_.size()) {
        throw UnknownNode(fmt::format("street node {} does not exist", to));
    }
    std::vector<std::pair<std::size_t, std::size_t>> parent;
    const auto dist = dijkstra(from, &parent);
    Route route;
    route.length = dist[to];
    for (std::size_t v = to; v != from; v = parent[v].first) {
        route.nodes.push_back(v);
        route.edges.push_back(parent[v].second);
    }
    route.nodes.push_back(from);
    std::reverse(route.nodes.begin(), route.nodes.end());
    std::reverse(route.edges.begin(), route.edges.end());
    return route;
}

CityModel generate_grid_city(const GridCityOptions &options) {
    if (options.width == 0 || options.height == 0 || !(options.spacing > 0.0)) {
        throw InvalidArgument("grid city needs positive width, height and spacing");
    }
    std::vector<StreetNode> nodes;
    for (std::size_t r = 0; r < options.height; ++r) {
        for (std::size_t c = 0; c < options.width; ++c) {
            nodes.push_back({nodes.size(), static_cast<double>(c) * options.spacing,
                             static_cast<double>(r) * options.spacing});
        }
    }
    std::vector<StreetEdge> edges;
    for (std::size_t r = 0; r < options.height; ++r) {
        for (std::size_t c = 0; c + 1 < options.width; ++c) {
            const std::size_t a = r * options.width + c;
            edges.push_back({edges.size(), a, a + 1, options.spacing});
        }
    }
    for (std::size_t r = 0; r + 1 < options.height; ++r) {
        for (std::size_t c = 0; c < options.width; ++c) {
            const std::size_t a = r * options.width + c;
            edges.push_back({edges.size(), a, a + options.width, options.spacing});
        }
    }
    Rng rng = Rng::substream(options.seed, "city-pois");
    std::vector<Poi> pois;
    for (const auto &category : schema::categories(schema::kTripPurpose)) {
        for (std::size_t i = 0; i < options.pois_per_category; ++i) {
            pois.push_back({pois.size(), category, rng.below(nodes.size())});
        }
    }
    return CityModel(std::move(nodes), std::move(edges), std::move(pois));
}

namespace {

void require_keys(const nlohmann::json &obj, std::initializer_list<std::string_view> allowed,
                  std::string_view where) {
    if (!obj.is_object()) {
        throw InvalidCity(fmt::format("{} must be a JSON object", where));
    }
    for (const auto &[key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
            throw InvalidCity(fmt::format("unknown key '{}' in {}", key, where));
        }
    }
}

} // namespace

CityModel read_city(std::istream &in) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw InvalidCity(fmt::format("city file is not valid JSON: {}", e.what()));
    }
    require_keys(doc, {"nodes", "edges", "pois", "speeds"}, "city");
    try {
        std::vector<StreetNode> nodes;
        for (const auto &n : doc.at("nodes")) {
            require_keys(n, {"id", "x", "y"}, "node");
            nodes.push_back(
                {n.at("id").get<std::size_t>(), n.at("x").get<double>(), n.at("y").get<double>()});
        }
        std::vector<StreetEdge> edges;
        for (const auto &e : doc.at("edges")) {
            require_keys(e, {"id", "a", "b", "length"}, "edge");
            edges.push_back({e.at("id").get<std::size_t>(), e.at("a").get<std::size_t>(),
                             e.at("b").get<std::size_t>(), e.at("length").get<double>()});
        }
        std::vector<Poi> pois;
        for (const auto &p : doc.at("pois")) {
            require_keys(p, {"id", "category", "node"}, "poi");
            pois.push_back({p.at("id").get<std::size_t>(), p.at("category").get<std::string>(),
                            p.at("node").get<std::size_t>()});
        }
        ModeSpeeds speeds = default_mode_speeds();
        if (doc.contains("speeds")) {
            for (const auto &[mode, value] : doc["speeds"].items()) {
                if (!schema::is_valid(schema::kPrimaryMode, mode)) {
                    throw InvalidCity(fmt::format("unknown mode '{}' in speeds", mode));
                }
                speeds[mode] = value.get<double>();
            }
        }
        return CityModel(std::move(nodes), std::move(edges), std::move(pois), std::move(speeds));
    } catch (const nlohmann::json::exception &e) {
        throw InvalidCity(fmt::format("malformed city file: {}", e.what()));
    }
}

CityModel read_city(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot open city file '{}'", path.string()));
    }
    return read_city(in);
}

void write_city(const CityModel &city, std::ostream &out) {
    const auto list = [&](std::string_view key, const auto &items, const auto &to_json) {
        out << "  \"" << key << "\": [";
        for (std::size_t i = 0; i < items.size(); ++i) {
            out << (i == 0 ? "\n    " : ",\n    ") << to_json(items[i]).dump();
        }
        out << "\n  ]";
    };
    using nlohmann::ordered_json;
    out << "{\n";
    list("nodes", city.nodes(), [](const StreetNode &n) {
        return ordered_json{{"id", n.id}, {"x", n.x}, {"y", n.y}};
    });
    out << ",\n";
    list("edges", city.edges(), [](const StreetEdge &e) {
        return ordered_json{{"id", e.id}, {"a", e.a}, {"b", e.b}, {"length", e.length}};
    });
    out << ",\n";
    list("pois", city.pois(), [](const Poi &p) {
        return ordered_json{{"id", p.id}, {"category", p.category}, {"node", p.node}};
    });
    ordered_json speeds = ordered_json::object();
    for (const auto &[mode, v] : city.speeds()) {
        speeds[mode] = v;
    }
    out << ",\n  \"speeds\": " << speeds.dump() << "\n}\n";
}

} // namespace prefchain
