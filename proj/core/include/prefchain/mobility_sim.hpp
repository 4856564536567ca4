#pragma once

#include "prefchain/city.hpp"
#include "prefchain/ingest.hpp"
#include "prefchain/llm_remodel.hpp"
#include "prefchain/pipeline.hpp"
#include "prefchain/rng.hpp"
#include "prefchain/schema.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace prefchain {

struct PlanEntry {
    int hour = 0;
    std::string purpose;

    friend bool operator==(const PlanEntry &, const PlanEntry &) = default;
};

/// A day's activities in time order.
struct DayPlan {
    std::vector<PlanEntry> entries;

    /// Throws InvalidArgument unless hours lie in [0, 23] and strictly
    /// increase, and every purpose is a known trip purpose.
    void validate() const;

    friend bool operator==(const DayPlan &, const DayPlan &) = default;
};

struct MemoryEvent {
    int minute = 0;
    std::string activity;
    std::size_t node = 0;
    std::string mode;
};

/// One simulated person. Locations are POI ids.
class AgentState {
public:
    AgentState(std::size_t id, AgentProfile profile, std::size_t home_poi, std::size_t home_node);

    std::size_t id() const noexcept { return id_; }
    const AgentProfile &profile() const noexcept { return profile_; }
    std::size_t home() const noexcept { return important_.at("home"); }
    /// home, and work/school once chosen.
    const std::map<std::string, std::size_t> &important_locations() const noexcept {
        return important_;
    }
    std::optional<std::size_t> important(const std::string &label) const;
    void store_important(const std::string &label, std::size_t poi);

    const std::vector<MemoryEvent> &memory() const noexcept { return memory_; }
    std::size_t current_node() const noexcept { return node_; }
    std::optional<std::size_t> current_poi() const noexcept { return poi_; }
    int minute() const noexcept { return minute_; }

    /// Appends to memory and advances the clock. Throws InvalidArgument when
    /// the event is earlier than the current time.
    void remember(MemoryEvent event);
    /// Moves the agent; the clock only moves forward.
    void move_to(std::size_t node, std::optional<std::size_t> poi, int minute);

private:
    std::size_t id_;
    AgentProfile profile_;
    std::map<std::string, std::size_t> important_;
    std::vector<MemoryEvent> memory_;
    std::size_t node_;
    std::optional<std::size_t> poi_;
    int minute_ = 0;
};

/// Profiles only, drawn as in generate_synthetic from the ("profiles", 0)
/// substream of `seed`.
std::vector<AgentProfile> generate_profiles(std::size_t n, const SyntheticSpec &spec,
                                            std::uint64_t seed);

class ScheduleProvider {
public:
    virtual ~ScheduleProvider() = default;
    virtual DayPlan schedule(const AgentProfile &profile, Rng &rng) = 0;
    virtual std::string id() const = 0;
};

/// Rule-based plans. Employed: work (7-9), eat (12), work (13), home (17-19).
/// Under 16 or k_12: school (7-8), home (14-16), recreation (17-19).
/// Everyone else: an errand (9-11), eat (12), social or recreation (14-16),
/// home (18-20).
class TemplateScheduleProvider final : public ScheduleProvider {
public:
    DayPlan schedule(const AgentProfile &profile, Rng &rng) override;
    std::string id() const override { return "template"; }
};

/// Asks the language model for a JSON array of {"hour", "purpose"} objects;
/// any invalid answer falls back to the template plan.
class LlmScheduleProvider final : public ScheduleProvider {
public:
    LlmScheduleProvider(LlmProvider &llm, GenerationParams params = {})
        : llm_(llm), params_(std::move(params)) {}
    DayPlan schedule(const AgentProfile &profile, Rng &rng) override;
    std::string id() const override { return "llm:" + llm_.id(); }

private:
    LlmProvider &llm_;
    GenerationParams params_;
    TemplateScheduleProvider fallback_;
};

/// Parses a schedule answer. Throws ParseFailure or InvalidArgument.
DayPlan parse_schedule(std::string_view raw);

/// Plan from the ("schedules", agent_index) substream of `seed`. Never throws
/// for a valid profile.
DayPlan generate_schedule(const AgentProfile &profile, ScheduleProvider &provider,
                          std::uint64_t seed, std::uint64_t agent_index = 0);

struct ModeChoice {
    std::string mode;
    std::string duration;
};

/// Samples a mode, then a duration bin, from the calibrated distributions of
/// the chain's primary_mode and duration_minutes sets, and logs the departure
/// in memory.
ModeChoice choose_mode_and_duration(AgentState &agent, const std::string &purpose, int hour,
                                    const PreferenceChain &chain, Rng &rng);

/// POI ids of `category` within speed(mode) * upper minutes of the duration
/// bin from `from`, nearest first, ties by id. Throws UnknownCategory when
/// the city has no POI of that category.
std::vector<std::size_t> search_pois(const CityModel &city, std::size_t from,
                                     const std::string &category, const std::string &mode,
                                     const std::string &duration_bin);

/// Nearest POI of a category regardless of radius. Throws UnknownCategory.
std::size_t nearest_poi(const CityModel &city, std::size_t from, const std::string &category);

/// Picks a destination. Stored important locations for the purpose are
/// reused without asking the provider. Otherwise the provider sees the
/// candidates and the agent's memory and must answer with a candidate id;
/// anything else selects candidates.front(). `candidates` must not be empty
/// unless a stored location applies.
std::size_t select_poi(const std::vector<std::size_t> &candidates, const AgentState &agent,
                       const std::string &purpose, const CityModel &city, LlmProvider &provider,
                       const GenerationParams &params = {});

/// Traversal counts per street edge and visit counts per POI, by hour.
class TrafficTally {
public:
    using HourCounts = std::array<std::uint64_t, 24>;

    TrafficTally() = default;
    TrafficTally(std::size_t edge_count, std::size_t poi_count)
        : edges_(edge_count), pois_(poi_count) {}

    void add_traversal(std::size_t edge, int hour);
    void add_visit(std::size_t poi, int hour);
    /// Elementwise sum. Throws AxisMismatch when shapes differ.
    void merge(const TrafficTally &other);

    const std::vector<HourCounts> &edge_counts() const noexcept { return edges_; }
    const std::vector<HourCounts> &poi_counts() const noexcept { return pois_; }
    std::uint64_t total_traversals() const;
    std::uint64_t total_visits() const;

    friend bool operator==(const TrafficTally &, const TrafficTally &) = default;

private:
    std::vector<HourCounts> edges_;
    std::vector<HourCounts> pois_;
};

/// CSV "kind,id,hour,count" with kind edge or poi; non-zero cells only, edges
/// first, then by id and hour.
void write_tally_csv(const TrafficTally &tally, std::ostream &out);
/// Throws ParseFailure; ids must fit the given shape.
TrafficTally read_tally_csv(std::istream &in, std::size_t edge_count, std::size_t poi_count);

struct TripLog {
    std::size_t agent = 0;
    int plan_hour = 0;
    std::string purpose;
    std::string mode;
    std::string duration;
    std::size_t poi = 0;
    int depart_minute = 0;
    int arrive_minute = 0;
    std::vector<std::size_t> edges;
};

struct DayResult {
    TrafficTally tally;
    std::vector<TripLog> trips;
    std::vector<AgentState> agents;
};

struct SimulationOptions {
    std::uint64_t seed = 0;
    std::size_t max_in_flight = 4;
    GenerationParams poi_generation;
};

/// Agents start at a home POI drawn from the ("homes", i) substream.
/// Throws UnknownCategory when the city has no home POI.
std::vector<AgentState> init_agents(const std::vector<AgentProfile> &profiles,
                                    const CityModel &city, std::uint64_t seed);

/// Simulates one day per agent. Each plan entry whose destination differs
/// from the current POI becomes a trip: mode and duration from the chain,
/// destination from memory or POI search, route by shortest path. Every
/// traversed edge counts in the plan entry's hour; the arrival counts as a
/// visit in the arrival hour (capped at 23). Agent i uses the ("mobility", i)
/// substream; results are identical for any max_in_flight.
DayResult run_day(std::vector<AgentState> agents, const std::vector<DayPlan> &plans,
                  const CityModel &city, const PreferenceChain &chain, LlmProvider &poi_provider,
                  const SimulationOptions &options);

struct FlowKld {
    /// Absent when either tally has no traversals / visits.
    std::optional<double> traffic;
    std::optional<double> poi;
};

/// Hour-summed edge and POI distributions compared with kld(). Throws
/// AxisMismatch when shapes differ.
FlowKld flow_kld(const TrafficTally &sim, const TrafficTally &reference,
                 double epsilon = kDefaultKldEpsilon);

} // namespace prefchain
