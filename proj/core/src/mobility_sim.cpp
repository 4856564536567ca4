#include "prefchain/mobility_sim.hpp"

#include "prefchain/error.hpp"
#include "prefchain/metrics.hpp"

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace prefchain {

void DayPlan::validate() const {
    int previous = -1;
    for (const auto &e : entries) {
        if (e.hour < 0 || e.hour > 23) {
            throw InvalidArgument(fmt::format("plan hour {} outside 0..23", e.hour));
        }
        if (e.hour <= previous) {
            throw InvalidArgument("plan hours must strictly increase");
        }
        if (!schema::is_valid(schema::kTripPurpose, e.purpose)) {
            throw InvalidArgument(fmt::format("unknown plan purpose '{}'", e.purpose));
        }
        previous = e.hour;
    }
}

AgentState::AgentState(std::size_t id, AgentProfile profile, std::size_t home_poi,
                       std::size_t home_node)
    : id_(id), profile_(std::move(profile)), node_(home_node), poi_(home_poi) {
    important_["home"] = home_poi;
}

std::optional<std::size_t> AgentState::important(const std::string &label) const {
    auto it = important_.find(label);
    if (it == important_.end()) {
        return std::nullopt;
    }
    return it->second;
}

void AgentState::store_important(const std::string &label, std::size_t poi) {
    important_[label] = poi;
}

void AgentState::remember(MemoryEvent event) {
    if (event.minute < minute_) {
        throw InvalidArgument(
            fmt::format("memory event at minute {} precedes minute {}", event.minute, minute_));
    }
    minute_ = event.minute;
    memory_.push_back(std::move(event));
}

void AgentState::move_to(std::size_t node, std::optional<std::size_t> poi, int minute) {
    node_ = node;
    poi_ = poi;
    minute_ = std::max(minute_, minute);
}

std::vector<AgentProfile> generate_profiles(std::size_t n, const SyntheticSpec &spec,
                                            std::uint64_t seed) {
    spec.validate();
    Rng rng = Rng::substream(seed, "profiles");
    std::vector<AgentProfile> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(sample_profile(spec, rng));
    }
    return out;
}

DayPlan TemplateScheduleProvider::schedule(const AgentProfile &profile, Rng &rng) {
    DayPlan plan;
    if (profile.employment_status == "employed") {
        plan.entries = {{rng.between(7, 9), "work"},
                        {12, "eat"},
                        {13, "work"},
                        {rng.between(17, 19), "home"}};
    } else if (profile.employment_status == "under_16" || profile.education == "k_12") {
        plan.entries = {{rng.between(7, 8), "school"},
                        {rng.between(14, 16), "home"},
                        {rng.between(17, 19), "recreation"}};
    } else {
        static const std::array<const char *, 3> errands = {"shop", "maintenance",
                                                            "other_activity_type"};
        static const std::array<const char *, 2> leisure = {"social", "recreation"};
        plan.entries = {{rng.between(9, 11), errands[rng.below(errands.size())]},
                        {12, "eat"},
                        {rng.between(14, 16), leisure[rng.below(leisure.size())]},
                        {rng.between(18, 20), "home"}};
    }
    return plan;
}

namespace {

/// First balanced `open ... close` block, honoring JSON strings.
std::optional<std::string_view> first_block(std::string_view raw, char open, char close) {
    const auto start = raw.find(open);
    if (start == std::string_view::npos) {
        return std::nullopt;
    }
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
        } else if (c == '"') {
            in_string = true;
        } else if (c == open) {
            ++depth;
        } else if (c == close && --depth == 0) {
            return raw.substr(start, i - start + 1);
        }
    }
    return std::nullopt;
}

std::string profile_prompt_lines(const AgentProfile &profile) {
    return "Profile: " + profile_to_text(profile) + "\n";
}

} // namespace

DayPlan parse_schedule(std::string_view raw) {
    const auto block = first_block(raw, '[', ']');
    if (!block) {
        throw ParseFailure("schedule answer contains no JSON array");
    }
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(*block);
    } catch (const nlohmann::json::exception &e) {
        throw ParseFailure(fmt::format("schedule answer is not valid JSON: {}", e.what()));
    }
    DayPlan plan;
    for (const auto &item : doc) {
        if (!item.is_object() || !item.contains("hour") || !item.contains("purpose") ||
            !item["hour"].is_number_integer() || !item["purpose"].is_string()) {
            throw ParseFailure("schedule entries need an integer hour and a purpose string");
        }
        plan.entries.push_back({item["hour"].get<int>(), item["purpose"].get<std::string>()});
    }
    plan.validate();
    return plan;
}

DayPlan LlmScheduleProvider::schedule(const AgentProfile &profile, Rng &rng) {
    DayPlan fallback = fallback_.schedule(profile, rng);
    std::string prompt = "Plan one day of trips for this person.\n" +
                         profile_prompt_lines(profile) + "Allowed purposes: ";
    const auto &purposes = schema::categories(schema::kTripPurpose);
    for (std::size_t i = 0; i < purposes.size(); ++i) {
        prompt += (i == 0 ? "" : ", ") + purposes[i];
    }
    prompt += "\nAnswer with a JSON array of objects {\"hour\": 0-23, \"purpose\": ...} in "
              "strictly increasing hour order.";
    try {
        auto plan = parse_schedule(llm_.complete(prompt, params_));
        if (plan.entries.empty()) {
            return fallback;
        }
        return plan;
    } catch (const Error &) {
        return fallback;
    }
}

DayPlan generate_schedule(const AgentProfile &profile, ScheduleProvider &provider,
                          std::uint64_t seed, std::uint64_t agent_index) {
    profile.validate();
    Rng rng = Rng::substream(seed, "schedules", agent_index);
    TemplateScheduleProvider fallback;
    try {
        auto plan = provider.schedule(profile, rng);
        plan.validate();
        return plan;
    } catch (const Error &) {
        Rng retry = Rng::substream(seed, "schedules", agent_index);
        return fallback.schedule(profile, retry);
    }
}

ModeChoice choose_mode_and_duration(AgentState &agent, const std::string &purpose, int hour,
                                    const PreferenceChain &chain, Rng &rng) {
    const QueryAgent query{agent.profile(), Desire{purpose, hour}, {}};
    const auto decisions = chain.decide_all(query);
    const auto &sets = chain.graph().choice_sets();
    const auto find = [&](std::string_view name) -> const ChoiceDecision & {
        for (std::size_t c = 0; c < sets.size(); ++c) {
            if (sets[c].name() == name) {
                return decisions[c];
            }
        }
        throw UnknownKey(fmt::format("choice set '{}' is not registered", name));
    };
    const auto &mode = find(schema::kPrimaryMode);
    const auto &duration = find(schema::kDurationMinutes);
    ModeChoice choice{sample_option(mode.posterior(), rng),
                      sample_option(duration.posterior(), rng)};
    agent.remember({std::max(agent.minute(), hour * 60), "depart:" + purpose,
                    agent.current_node(), choice.mode});
    return choice;
}

std::vector<std::size_t> search_pois(const CityModel &city, std::size_t from,
                                     const std::string &category, const std::string &mode,
                                     const std::string &duration_bin) {
    if (!city.has_category(category)) {
        throw UnknownCategory(fmt::format("city has no POI of category '{}'", category));
    }
    const double radius = city.speed(mode) * schema::duration_upper_minutes(duration_bin);
    const auto dist = city.distances_from(from);
    std::vector<std::pair<double, std::size_t>> hits;
    for (std::size_t id : city.pois_of(category)) {
        const double d = dist[city.pois()[id].node];
        if (d <= radius) {
            hits.emplace_back(d, id);
        }
    }
    std::sort(hits.begin(), hits.end());
    std::vector<std::size_t> out;
    out.reserve(hits.size());
    for (const auto &[_, id] : hits) {
        out.push_back(id);
    }
    return out;
}

std::size_t nearest_poi(const CityModel &city, std::size_t from, const std::string &category) {
    const auto ids = city.pois_of(category);
    if (ids.empty()) {
        throw UnknownCategory(fmt::format("city has no POI of category '{}'", category));
    }
    const auto dist = city.distances_from(from);
    std::pair<double, std::size_t> best{dist[city.pois()[ids.front()].node], ids.front()};
    for (std::size_t id : ids) {
        best = std::min(best, std::pair{dist[city.pois()[id].node], id});
    }
    return best.second;
}

namespace {

std::optional<std::size_t> parse_poi_answer(std::string_view raw) {
    if (auto block = first_block(raw, '{', '}')) {
        try {
            const auto doc = nlohmann::json::parse(*block);
            if (doc.contains("poi_id") && doc["poi_id"].is_number_unsigned()) {
                return doc["poi_id"].get<std::size_t>();
            }
        } catch (const nlohmann::json::exception &) {
        }
        return std::nullopt;
    }
    const auto first = raw.find_first_of("0123456789");
    if (first == std::string_view::npos) {
        return std::nullopt;
    }
    std::size_t value = 0;
    for (std::size_t i = first; i < raw.size() && std::isdigit(static_cast<unsigned char>(raw[i]));
         ++i) {
        value = value * 10 + static_cast<std::size_t>(raw[i] - '0');
    }
    return value;
}

} // namespace

std::size_t select_poi(const std::vector<std::size_t> &candidates, const AgentState &agent,
                       const std::string &purpose, const CityModel &city, LlmProvider &provider,
                       const GenerationParams &params) {
    if (auto stored = agent.important(purpose)) {
        return *stored;
    }
    if (candidates.empty()) {
        throw InvalidArgument("select_poi needs at least one candidate");
    }
    std::ostringstream prompt;
    prompt << "Choose a destination for a '" << purpose << "' trip.\n"
           << profile_prompt_lines(agent.profile()) << "Recent activity:\n";
    if (agent.memory().empty()) {
        prompt << "- none\n";
    }
    for (const auto &m : agent.memory()) {
        prompt << fmt::format("- {:02}:{:02} {} at node {} by {}\n", m.minute / 60, m.minute % 60,
                              m.activity, m.node, m.mode);
    }
    prompt << "Candidates:\n";
    for (std::size_t id : candidates) {
        const auto &node = city.nodes()[city.pois()[id].node];
        prompt << fmt::format("- poi_id {} at ({}, {})\n", id, node.x, node.y);
    }
    prompt << "Answer with JSON {\"poi_id\": <id>}.";
    std::string answer;
    try {
        answer = provider.complete(prompt.str(), params);
    } catch (const Error &) {
        return candidates.front();
    }
    const auto picked = parse_poi_answer(answer);
    if (picked && std::find(candidates.begin(), candidates.end(), *picked) != candidates.end()) {
        return *picked;
    }
    return candidates.front();
}

void TrafficTally::add_traversal(std::size_t edge, int hour) {
    if (edge >= edges_.size() || hour < 0 || hour > 23) {
        throw InvalidArgument(fmt::format("traversal ({}, {}) outside the tally", edge, hour));
    }
    ++edges_[edge][static_cast<std::size_t>(hour)];
}

void TrafficTally::add_visit(std::size_t poi, int hour) {
    if (poi >= pois_.size() || hour < 0 || hour > 23) {
        throw InvalidArgument(fmt::format("visit ({}, {}) outside the tally", poi, hour));
    }
    ++pois_[poi][static_cast<std::size_t>(hour)];
}

void TrafficTally::merge(const TrafficTally &other) {
    if (edges_.size() != other.edges_.size() || pois_.size() != other.pois_.size()) {
        throw AxisMismatch("tallies cover different street graphs or POI tables");
    }
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        for (std::size_t h = 0; h < 24; ++h) {
            edges_[i][h] += other.edges_[i][h];
        }
    }
    for (std::size_t i = 0; i < pois_.size(); ++i) {
        for (std::size_t h = 0; h < 24; ++h) {
            pois_[i][h] += other.pois_[i][h];
        }
    }
}

namespace {

std::uint64_t sum_counts(const std::vector<TrafficTally::HourCounts> &rows) {
    std::uint64_t total = 0;
    for (const auto &row : rows) {
        for (auto c : row) {
            total += c;
        }
    }
    return total;
}

} // namespace

std::uint64_t TrafficTally::total_traversals() const { return sum_counts(edges_); }
std::uint64_t TrafficTally::total_visits() const { return sum_counts(pois_); }

void write_tally_csv(const TrafficTally &tally, std::ostream &out) {
    out << "kind,id,hour,count\n";
    const auto emit = [&](std::string_view kind, const std::vector<TrafficTally::HourCounts> &rows) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t h = 0; h < 24; ++h) {
                if (rows[i][h] != 0) {
                    out << kind << ',' << i << ',' << h << ',' << rows[i][h] << '\n';
                }
            }
        }
    };
    emit("edge", tally.edge_counts());
    emit("poi", tally.poi_counts());
}

TrafficTally read_tally_csv(std::istream &in, std::size_t edge_count, std::size_t poi_count) {
    TrafficTally tally(edge_count, poi_count);
    std::string line;
    if (!std::getline(in, line) || line.rfind("kind,id,hour,count", 0) != 0) {
        throw ParseFailure("tally CSV must start with the header kind,id,hour,count");
    }
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::istringstream fields(line);
        std::string kind, id, hour, count;
        std::getline(fields, kind, ',');
        std::getline(fields, id, ',');
        std::getline(fields, hour, ',');
        std::getline(fields, count, ',');
        try {
            const std::size_t i = std::stoul(id);
            const int h = std::stoi(hour);
            const std::uint64_t c = std::stoull(count);
            for (std::uint64_t k = 0; k < c; ++k) {
                if (kind == "edge") {
                    tally.add_traversal(i, h);
                } else if (kind == "poi") {
                    tally.add_visit(i, h);
                } else {
                    throw ParseFailure(fmt::format("tally row {}: unknown kind '{}'", row, kind));
                }
            }
        } catch (const std::logic_error &) {
            throw ParseFailure(fmt::format("tally row {} is malformed: '{}'", row, line));
        } catch (const InvalidArgument &e) {
            throw ParseFailure(fmt::format("tally row {}: {}", row, e.what()));
        }
    }
    return tally;
}

std::vector<AgentState> init_agents(const std::vector<AgentProfile> &profiles,
                                    const CityModel &city, std::uint64_t seed) {
    const auto homes = city.pois_of("home");
    if (homes.empty()) {
        throw UnknownCategory("city has no home POI");
    }
    std::vector<AgentState> agents;
    agents.reserve(profiles.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        Rng rng = Rng::substream(seed, "homes", i);
        const std::size_t home = homes[rng.below(homes.size())];
        agents.emplace_back(i, profiles[i], home, city.pois()[home].node);
    }
    return agents;
}

namespace {

struct AgentDay {
    TrafficTally tally;
    std::vector<TripLog> trips;
};

AgentDay simulate_agent(AgentState &agent, const DayPlan &plan, const CityModel &city,
                        const PreferenceChain &chain, LlmProvider &poi_provider,
                        const SimulationOptions &options) {
    AgentDay day{TrafficTally(city.edges().size(), city.pois().size()), {}};
    Rng rng = Rng::substream(options.seed, "mobility", agent.id());
    for (const auto &entry : plan.entries) {
        const auto stored = agent.important(entry.purpose);
        if (stored && agent.current_poi() == stored) {
            continue;
        }
        const auto choice = choose_mode_and_duration(agent, entry.purpose, entry.hour, chain, rng);
        std::size_t destination = 0;
        if (stored) {
            destination = *stored;
        } else {
            auto candidates = search_pois(city, agent.current_node(), entry.purpose, choice.mode,
                                          choice.duration);
            if (candidates.empty()) {
                candidates.push_back(nearest_poi(city, agent.current_node(), entry.purpose));
            }
            destination = select_poi(candidates, agent, entry.purpose, city, poi_provider,
                                     options.poi_generation);
            if (entry.purpose == "work" || entry.purpose == "school") {
                agent.store_important(entry.purpose, destination);
            }
        }
        const auto route = city.shortest_path(agent.current_node(), city.pois()[destination].node);
        const int depart = std::max(agent.minute(), entry.hour * 60);
        const int travel =
            static_cast<int>(std::ceil(route.length / city.speed(choice.mode)));
        const int arrive = depart + travel;
        for (std::size_t e : route.edges) {
            day.tally.add_traversal(e, entry.hour);
        }
        day.tally.add_visit(destination, std::min(23, arrive / 60));
        agent.remember({arrive, entry.purpose, city.pois()[destination].node, choice.mode});
        agent.move_to(city.pois()[destination].node, destination, arrive);
        day.trips.push_back({agent.id(), entry.hour, entry.purpose, choice.mode, choice.duration,
                             destination, depart, arrive, route.edges});
    }
    return day;
}

} // namespace

DayResult run_day(std::vector<AgentState> agents, const std::vector<DayPlan> &plans,
                  const CityModel &city, const PreferenceChain &chain, LlmProvider &poi_provider,
                  const SimulationOptions &options) {
    if (plans.size() != agents.size()) {
        throw InvalidArgument("run_day needs one plan per agent");
    }
    std::vector<AgentDay> days(agents.size());
    parallel_for(agents.size(), options.max_in_flight, [&](std::size_t i) {
        days[i] = simulate_agent(agents[i], plans[i], city, chain, poi_provider, options);
    });
    DayResult result{TrafficTally(city.edges().size(), city.pois().size()), {}, {}};
    for (auto &day : days) {
        result.tally.merge(day.tally);
        for (auto &t : day.trips) {
            result.trips.push_back(std::move(t));
        }
    }
    result.agents = std::move(agents);
    return result;
}

namespace {

std::optional<JointDistribution> hour_summed(const std::vector<TrafficTally::HourCounts> &rows,
                                             const ChoiceCategorySet &axis) {
    std::vector<double> cells(rows.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (auto c : rows[i]) {
            cells[i] += static_cast<double>(c);
        }
        total += cells[i];
    }
    if (total == 0.0) {
        return std::nullopt;
    }
    for (auto &c : cells) {
        c /= total;
    }
    double sum = 0.0;
    for (double c : cells) {
        sum += c;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        for (auto &c : cells) {
            c /= sum;
        }
    }
    return JointDistribution({"all"}, axis, std::move(cells));
}

ChoiceCategorySet id_axis(std::string name, std::size_t n) {
    std::vector<std::string> ids;
    ids.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        ids.push_back(std::to_string(i));
    }
    return ChoiceCategorySet(std::move(name), std::move(ids));
}

std::optional<double> compare(const std::vector<TrafficTally::HourCounts> &sim,
                              const std::vector<TrafficTally::HourCounts> &ref, std::string name,
                              double epsilon) {
    if (sim.empty()) {
        return std::nullopt;
    }
    const auto axis = id_axis(std::move(name), sim.size());
    const auto p = hour_summed(sim, axis);
    const auto q = hour_summed(ref, axis);
    if (!p || !q) {
        return std::nullopt;
    }
    return kld(*p, *q, epsilon);
}

} // namespace

FlowKld flow_kld(const TrafficTally &sim, const TrafficTally &reference, double epsilon) {
    if (sim.edge_counts().size() != reference.edge_counts().size() ||
        sim.poi_counts().size() != reference.poi_counts().size()) {
        throw AxisMismatch("tallies cover different street graphs or POI tables");
    }
    return {compare(sim.edge_counts(), reference.edge_counts(), "edge", epsilon),
            compare(sim.poi_counts(), reference.poi_counts(), "poi", epsilon)};
}

} // namespace prefchain
