#include "prefchain/schema.hpp"

#include "prefchain/error.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <charconv>
#include <set>

namespace prefchain {

SchemaViolation::SchemaViolation(std::size_t row, std::string column, std::string value)
    : DataError(row == 0 ? fmt::format("schema violation in column '{}': invalid value '{}'",
                                       column, value)
                         : fmt::format("schema violation at row {}, column '{}': invalid value '{}'",
                                       row, column, value)),
      row_(row), column_(std::move(column)), value_(std::move(value)) {}

ChoiceCategorySet::ChoiceCategorySet(std::string name, std::vector<std::string> options)
    : name_(std::move(name)), options_(std::move(options)) {
    if (options_.empty()) {
        throw InvalidArgument(fmt::format("choice set '{}' has no options", name_));
    }
    std::set<std::string_view> seen;
    for (const auto &option : options_) {
        if (!seen.insert(option).second) {
            throw InvalidArgument(
                fmt::format("choice set '{}' repeats option '{}'", name_, option));
        }
    }
}

std::optional<std::size_t> ChoiceCategorySet::index_of(std::string_view option) const {
    auto it = std::find(options_.begin(), options_.end(), option);
    if (it == options_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - options_.begin());
}

namespace schema {

namespace {

std::vector<std::string> hours() {
    std::vector<std::string> out;
    for (int h = 0; h < 24; ++h) {
        out.push_back(std::to_string(h));
    }
    return out;
}

const std::map<std::string, std::vector<std::string>, std::less<>> &table() {
    static const std::map<std::string, std::vector<std::string>, std::less<>> categories = {
        {std::string(kAgeGroup), {"Under 18", "18-24", "25-34", "35-44", "45-54", "55-64", "65+"}},
        {std::string(kIncomeGroup),
         {"Under $10k", "$10k-$50k", "$50k-$100k", "$100k-$150k", "$150k-$200k", "$200k-$300k",
          "$300k+"}},
        {std::string(kEmploymentStatus),
         {"under_16", "not_in_labor_force", "unemployed", "employed"}},
        {std::string(kHouseholdSize), {"1", "2", "3", "4", "5", "6", "7", "8"}},
        {std::string(kAvailableVehicles),
         {"zero", "one", "two", "three_plus", "unknown_num_vehicles"}},
        {std::string(kEducation),
         {"no_school", "k_12", "high_school", "bachelors_degree", "advanced_degree",
          "some_college"}},
        {std::string(kTripPurpose),
         {"eat", "work", "home", "school", "shop", "maintenance", "social", "recreation",
          "other_activity_type"}},
        {std::string(kStartTime), hours()},
        {std::string(kPrimaryMode),
         {"walking", "biking", "auto_passenger", "public_transit", "private_auto",
          "on_demand_auto", "other_travel_mode"}},
        {std::string(kDurationMinutes), {"0-10", "10-20", "20-30", "30-40", "40-50", "50-60"}},
    };
    return categories;
}

} // namespace

const std::vector<std::string> &categories(std::string_view field) {
    const auto &t = table();
    auto it = t.find(field);
    if (it == t.end()) {
        throw UnknownKey(fmt::format("unknown schema field '{}'", field));
    }
    return it->second;
}

bool is_valid(std::string_view field, std::string_view value) {
    const auto &values = categories(field);
    return std::find(values.begin(), values.end(), value) != values.end();
}

int duration_upper_minutes(std::string_view bin) {
    auto dash = bin.find('-');
    if (dash == std::string_view::npos || !is_valid(kDurationMinutes, bin)) {
        throw UnknownKey(fmt::format("unknown duration bin '{}'", bin));
    }
    int upper = 0;
    auto tail = bin.substr(dash + 1);
    std::from_chars(tail.data(), tail.data() + tail.size(), upper);
    return upper;
}

ChoiceCategorySet primary_mode() {
    return ChoiceCategorySet(std::string(kPrimaryMode), categories(kPrimaryMode));
}

ChoiceCategorySet duration_minutes() {
    return ChoiceCategorySet(std::string(kDurationMinutes), categories(kDurationMinutes));
}

} // namespace schema

const std::string &AgentProfile::field(std::string_view name) const {
    return const_cast<AgentProfile *>(this)->field(name);
}

std::string &AgentProfile::field(std::string_view name) {
    if (name == schema::kAgeGroup) return age_group;
    if (name == schema::kIncomeGroup) return income_group;
    if (name == schema::kEmploymentStatus) return employment_status;
    if (name == schema::kHouseholdSize) return household_size;
    if (name == schema::kAvailableVehicles) return available_vehicles;
    if (name == schema::kEducation) return education;
    throw UnknownKey(fmt::format("'{}' is not a profile field", name));
}

void AgentProfile::validate(std::size_t row) const {
    for (auto name : schema::kProfileFields) {
        const auto &value = field(name);
        if (!schema::is_valid(name, value)) {
            throw SchemaViolation(row, std::string(name), value);
        }
    }
}

std::map<std::string, std::string> AgentProfile::to_attributes() const {
    std::map<std::string, std::string> out;
    for (auto name : schema::kProfileFields) {
        out.emplace(std::string(name), field(name));
    }
    return out;
}

void Desire::validate(std::size_t row) const {
    if (!schema::is_valid(schema::kTripPurpose, trip_purpose)) {
        throw SchemaViolation(row, std::string(schema::kTripPurpose), trip_purpose);
    }
    if (start_time < 0 || start_time > 23) {
        throw SchemaViolation(row, std::string(schema::kStartTime), std::to_string(start_time));
    }
}

const std::string &TripRecord::choice(std::string_view choice_set) const {
    if (choice_set == schema::kPrimaryMode) return primary_mode;
    if (choice_set == schema::kDurationMinutes) return duration_minutes;
    throw UnknownKey(fmt::format("'{}' is not an output choice set", choice_set));
}

void TripRecord::validate(std::size_t row) const {
    profile.validate(row);
    desire.validate(row);
    if (!schema::is_valid(schema::kPrimaryMode, primary_mode)) {
        throw SchemaViolation(row, std::string(schema::kPrimaryMode), primary_mode);
    }
    if (!schema::is_valid(schema::kDurationMinutes, duration_minutes)) {
        throw SchemaViolation(row, std::string(schema::kDurationMinutes), duration_minutes);
    }
    if (household_id && household_id->empty()) {
        throw SchemaViolation(row, std::string(schema::kHouseholdId), "");
    }
}

} // namespace prefchain
