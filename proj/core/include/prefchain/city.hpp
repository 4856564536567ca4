#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace prefchain {

struct StreetNode {
    std::size_t id = 0;
    double x = 0.0;
    double y = 0.0;
};

/// Undirected street segment, length in meters.
struct StreetEdge {
    std::size_t id = 0;
    std::size_t a = 0;
    std::size_t b = 0;
    double length = 0.0;
};

/// Point of interest; category is a trip purpose.
struct Poi {
    std::size_t id = 0;
    std::string category;
    std::size_t node = 0;
};

/// Meters per minute by travel mode.
using ModeSpeeds = std::map<std::string, double, std::less<>>;

/// walking 80, biking 250, public_transit 400, every auto mode 500,
/// other_travel_mode 80.
ModeSpeeds default_mode_speeds();

struct Route {
    std::vector<std::size_t> nodes;
    std::vector<std::size_t> edges;
    double length = 0.0;
};

/// Street graph, POI table and mode speeds.
class CityModel {
public:
    /// Ids must equal positions. Throws InvalidCity when the graph is
    /// disconnected, an edge or POI references a missing node, a length is not
    /// positive, a POI category is not a trip purpose, or a travel mode lacks a
    /// positive speed.
    CityModel(std::vector<StreetNode> nodes, std::vector<StreetEdge> edges, std::vector<Poi> pois,
              ModeSpeeds speeds = default_mode_speeds());

    const std::vector<StreetNode> &nodes() const noexcept { return nodes_; }
    const std::vector<StreetEdge> &edges() const noexcept { return edges_; }
    const std::vector<Poi> &pois() const noexcept { return pois_; }
    const ModeSpeeds &speeds() const noexcept { return speeds_; }

    /// Throws UnknownKey.
    double speed(std::string_view mode) const;

    bool has_category(std::string_view category) const;
    /// POI ids of a category in id order.
    std::vector<std::size_t> pois_of(std::string_view category) const;

    /// Shortest-path distance from `from` to every node.
    std::vector<double> distances_from(std::size_t from) const;

    /// Shortest path; among equal-length paths the one found first by a
    /// (distance, node id) ordered search wins. Throws UnknownNode.
    Route shortest_path(std::size_t from, std::size_t to) const;

private:
    std::vector<double> dijkstra(std::size_t from,
                                 std::vector<std::pair<std::size_t, std::size_t>> *parent) const;

    std::vector<StreetNode> nodes_;
    std::vector<StreetEdge> edges_;
    std::vector<Poi> pois_;
    ModeSpeeds speeds_;
    /// node -> (neighbor, edge id), edges in id order.
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adjacency_;
};

struct GridCityOptions {
    std::size_t width = 20;
    std::size_t height = 20;
    double spacing = 100.0;
    std::size_t pois_per_category = 10;
    std::uint64_t seed = 7;
};

/// Rectangular grid; node id = row * width + column. POIs are placed on
/// seeded random nodes, `pois_per_category` for each trip purpose.
CityModel generate_grid_city(const GridCityOptions &options = {});

/// JSON with "nodes", "edges", "pois" and optional "speeds". Throws InvalidCity.
CityModel read_city(std::istream &in);
CityModel read_city(const std::filesystem::path &path);
void write_city(const CityModel &city, std::ostream &out);

} // namespace prefchain
