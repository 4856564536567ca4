#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace prefchain {

/// Ordered, named set of discrete options (e.g. the seven travel modes).
class ChoiceCategorySet {
public:
    ChoiceCategorySet() = default;
    /// Throws InvalidArgument when options are empty or repeated.
    ChoiceCategorySet(std::string name, std::vector<std::string> options);

    const std::string &name() const noexcept { return name_; }
    const std::vector<std::string> &options() const noexcept { return options_; }
    std::size_t size() const noexcept { return options_.size(); }

    std::optional<std::size_t> index_of(std::string_view option) const;
    bool contains(std::string_view option) const { return index_of(option).has_value(); }

    friend bool operator==(const ChoiceCategorySet &, const ChoiceCategorySet &) = default;

private:
    std::string name_;
    std::vector<std::string> options_;
};

namespace schema {

// Column names, in canonical CSV order.
inline constexpr std::string_view kAgeGroup = "age_group";
inline constexpr std::string_view kIncomeGroup = "income_group";
inline constexpr std::string_view kEmploymentStatus = "employment_status";
inline constexpr std::string_view kHouseholdSize = "household_size";
inline constexpr std::string_view kAvailableVehicles = "available_vehicles";
inline constexpr std::string_view kEducation = "education";
inline constexpr std::string_view kTripPurpose = "trip_purpose";
inline constexpr std::string_view kStartTime = "start_time";
inline constexpr std::string_view kPrimaryMode = "primary_mode";
inline constexpr std::string_view kDurationMinutes = "duration_minutes";
inline constexpr std::string_view kHouseholdId = "household_id";

/// The six demographic fields of a profile, in schema order.
inline constexpr std::array<std::string_view, 6> kProfileFields = {
    kAgeGroup, kIncomeGroup, kEmploymentStatus, kHouseholdSize, kAvailableVehicles, kEducation};

/// Required CSV columns, in canonical order.
inline constexpr std::array<std::string_view, 10> kRecordColumns = {
    kAgeGroup,   kIncomeGroup, kEmploymentStatus, kHouseholdSize, kAvailableVehicles,
    kEducation,  kTripPurpose, kStartTime,        kPrimaryMode,   kDurationMinutes};

/// Category list of a categorical field. Throws UnknownKey for other names.
const std::vector<std::string> &categories(std::string_view field);

bool is_valid(std::string_view field, std::string_view value);

/// Upper bound, in minutes, of a duration bin such as "20-30".
int duration_upper_minutes(std::string_view bin);

ChoiceCategorySet primary_mode();
ChoiceCategorySet duration_minutes();

} // namespace schema

/// Categorized demographic attributes of one person.
struct AgentProfile {
    std::string age_group;
    std::string income_group;
    std::string employment_status;
    std::string household_size;
    std::string available_vehicles;
    std::string education;

    /// Value of a profile field by column name. Throws UnknownKey.
    const std::string &field(std::string_view name) const;
    std::string &field(std::string_view name);

    /// Throws SchemaViolation(row, column, value) on the first invalid field.
    void validate(std::size_t row = 0) const;

    std::map<std::string, std::string> to_attributes() const;

    friend auto operator<=>(const AgentProfile &, const AgentProfile &) = default;
};

/// A trip need: purpose and start hour.
struct Desire {
    std::string trip_purpose;
    int start_time = 0;

    void validate(std::size_t row = 0) const;

    friend auto operator<=>(const Desire &, const Desire &) = default;
};

/// One categorized reference or validation sample.
struct TripRecord {
    AgentProfile profile;
    Desire desire;
    std::string primary_mode;
    std::string duration_minutes;
    std::optional<std::string> household_id;

    /// Observed choice for one of the two output choice sets.
    const std::string &choice(std::string_view choice_set) const;

    void validate(std::size_t row = 0) const;

    friend bool operator==(const TripRecord &, const TripRecord &) = default;
};

} // namespace prefchain
