#include "prefchain/ingest.hpp"

#include "prefchain/error.hpp"

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>

namespace prefchain {

namespace {

std::vector<std::string> split_csv_line(const std::string &line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

std::string csv_cell(const std::string &value) {
    if (value.find_first_of(",\"\n") == std::string::npos) {
        return value;
    }
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') {
            out.push_back('"');
        }
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

void strip_cr(std::string &line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
}

} // namespace

std::vector<TripRecord> read_csv(std::istream &in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw MissingColumn("CSV input has no header row");
    }
    strip_cr(line);
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    const auto header = split_csv_line(line);
    std::map<std::string, std::size_t, std::less<>> column;
    for (std::size_t i = 0; i < header.size(); ++i) {
        column.emplace(header[i], i);
    }
    std::vector<std::size_t> required;
    for (auto name : schema::kRecordColumns) {
        auto it = column.find(name);
        if (it == column.end()) {
            throw MissingColumn(fmt::format("CSV is missing required column '{}'", name));
        }
        required.push_back(it->second);
    }
    std::optional<std::size_t> household;
    if (auto it = column.find(schema::kHouseholdId); it != column.end()) {
        household = it->second;
    }

    std::vector<TripRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        strip_cr(line);
        if (line.empty()) {
            continue;
        }
        ++row;
        const auto cells = split_csv_line(line);
        if (cells.size() < header.size()) {
            throw SchemaViolation(row, header[cells.size()], "");
        }
        auto get = [&](std::size_t k) -> const std::string & { return cells[required[k]]; };
        TripRecord r;
        r.profile.age_group = get(0);
        r.profile.income_group = get(1);
        r.profile.employment_status = get(2);
        r.profile.household_size = get(3);
        r.profile.available_vehicles = get(4);
        r.profile.education = get(5);
        r.desire.trip_purpose = get(6);
        const std::string &hour = get(7);
        if (!schema::is_valid(schema::kStartTime, hour)) {
            throw SchemaViolation(row, std::string(schema::kStartTime), hour);
        }
        r.desire.start_time = std::stoi(hour);
        r.primary_mode = get(8);
        r.duration_minutes = get(9);
        if (household && !cells[*household].empty()) {
            r.household_id = cells[*household];
        }
        r.validate(row);
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<TripRecord> read_csv(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError(fmt::format("cannot open CSV file '{}'", path.string()));
    }
    return read_csv(in);
}

void write_csv(std::span<const TripRecord> records, std::ostream &out) {
    const bool with_household = std::any_of(records.begin(), records.end(),
                                            [](const TripRecord &r) { return r.household_id; });
    std::string header;
    for (auto name : schema::kRecordColumns) {
        header += (header.empty() ? "" : ",") + std::string(name);
    }
    if (with_household) {
        header += "," + std::string(schema::kHouseholdId);
    }
    out << header << '\n';
    for (const auto &r : records) {
        out << csv_cell(r.profile.age_group) << ',' << csv_cell(r.profile.income_group) << ','
            << csv_cell(r.profile.employment_status) << ',' << csv_cell(r.profile.household_size)
            << ',' << csv_cell(r.profile.available_vehicles) << ','
            << csv_cell(r.profile.education) << ',' << csv_cell(r.desire.trip_purpose) << ','
            << r.desire.start_time << ',' << csv_cell(r.primary_mode) << ','
            << csv_cell(r.duration_minutes);
        if (with_household) {
            out << ',' << csv_cell(r.household_id.value_or(""));
        }
        out << '\n';
    }
}

void write_csv(std::span<const TripRecord> records, const std::filesystem::path &path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError(fmt::format("cannot write CSV file '{}'", path.string()));
    }
    write_csv(records, out);
}

// ---------------------------------------------------------------------------
// Synthetic populations

namespace {

constexpr std::array<std::string_view, 8> kInputFields = {
    schema::kAgeGroup,          schema::kIncomeGroup, schema::kEmploymentStatus,
    schema::kHouseholdSize,     schema::kAvailableVehicles, schema::kEducation,
    schema::kTripPurpose,       schema::kStartTime};

void validate_table(const CategoricalTable &table, std::string_view field,
                    std::string_view where) {
    double total = 0.0;
    for (const auto &[value, p] : table) {
        if (!schema::is_valid(field, value)) {
            throw InvalidSpec(fmt::format("{}: '{}' is not a category of {}", where, value, field));
        }
        if (!(p >= 0.0) || !std::isfinite(p)) {
            throw InvalidSpec(fmt::format("{}: probability of '{}' is {}", where, value, p));
        }
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw InvalidSpec(fmt::format("{}: probabilities of {} sum to {}", where, field, total));
    }
}

std::string draw(const CategoricalTable *table, std::string_view field, Rng &rng) {
    const auto &values = schema::categories(field);
    std::vector<double> weights(values.size(), table ? 0.0 : 1.0);
    if (table) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (auto it = table->find(values[i]); it != table->end()) {
                weights[i] = it->second;
            }
        }
    }
    return values[rng.categorical(weights)];
}

const BucketTable &bucket_for(const SyntheticSpec &spec, const std::string &value) {
    if (auto it = spec.buckets.find(value); it != spec.buckets.end()) {
        return it->second;
    }
    if (auto it = spec.buckets.find("*"); it != spec.buckets.end()) {
        return it->second;
    }
    throw InvalidSpec(fmt::format("no bucket for {} = '{}'", spec.bucket_attribute, value));
}

const CategoricalTable *marginal(const SyntheticSpec &spec, std::string_view field) {
    auto it = spec.marginals.find(std::string(field));
    return it == spec.marginals.end() ? nullptr : &it->second;
}

CategoricalTable table_from_json(const nlohmann::json &j, std::string_view where) {
    if (!j.is_object()) {
        throw InvalidSpec(fmt::format("{} must be an object of probabilities", where));
    }
    CategoricalTable table;
    for (const auto &[k, v] : j.items()) {
        if (!v.is_number()) {
            throw InvalidSpec(fmt::format("{}: value of '{}' is not a number", where, k));
        }
        table.emplace(k, v.get<double>());
    }
    return table;
}

void reject_unknown(const nlohmann::json &j, std::initializer_list<std::string_view> allowed,
                    std::string_view where) {
    for (const auto &[k, v] : j.items()) {
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) {
            throw InvalidSpec(fmt::format("{}: unknown key '{}'", where, k));
        }
    }
}

} // namespace

void SyntheticSpec::validate() const {
    if (spec_version != kVersion) {
        throw InvalidSpec(fmt::format("unsupported spec_version {}", spec_version));
    }
    if (std::find(schema::kProfileFields.begin(), schema::kProfileFields.end(),
                  bucket_attribute) == schema::kProfileFields.end()) {
        throw InvalidSpec(fmt::format("bucket_attribute '{}' is not a profile field",
                                      bucket_attribute));
    }
    for (const auto &[field, table] : marginals) {
        if (std::find(kInputFields.begin(), kInputFields.end(), field) == kInputFields.end()) {
            throw InvalidSpec(fmt::format("marginal for unknown field '{}'", field));
        }
        validate_table(table, field, fmt::format("marginals.{}", field));
    }
    if (buckets.empty()) {
        throw InvalidSpec("spec defines no buckets");
    }
    for (const auto &[value, bucket] : buckets) {
        const std::string where = fmt::format("buckets.{}", value);
        if (value != "*" && !schema::is_valid(bucket_attribute, value)) {
            throw InvalidSpec(fmt::format("{}: not a category of {}", where, bucket_attribute));
        }
        validate_table(bucket.primary_mode, schema::kPrimaryMode, where);
        validate_table(bucket.duration_minutes, schema::kDurationMinutes, where);
        for (const auto &[field, table] : bucket.attributes) {
            if (field == bucket_attribute ||
                std::find(schema::kProfileFields.begin(), schema::kProfileFields.end(), field) ==
                    schema::kProfileFields.end()) {
                throw InvalidSpec(fmt::format("{}: cannot override '{}'", where, field));
            }
            validate_table(table, field, fmt::format("{}.attributes.{}", where, field));
        }
    }
    // Every bucket value that can be drawn needs a table.
    const auto *bucket_marginal = marginal(*this, bucket_attribute);
    for (const auto &value : schema::categories(bucket_attribute)) {
        const bool reachable =
            bucket_marginal == nullptr ||
            (bucket_marginal->contains(value) && bucket_marginal->at(value) > 0.0);
        if (reachable && !buckets.contains(value) && !buckets.contains("*")) {
            throw InvalidSpec(fmt::format("no bucket for {} = '{}'", bucket_attribute, value));
        }
    }
}

AgentProfile sample_profile(const SyntheticSpec &spec, Rng &rng) {
    AgentProfile profile;
    const std::string key =
        draw(marginal(spec, spec.bucket_attribute), spec.bucket_attribute, rng);
    profile.field(spec.bucket_attribute) = key;
    const BucketTable &bucket = bucket_for(spec, key);
    for (auto field : schema::kProfileFields) {
        if (field == spec.bucket_attribute) {
            continue;
        }
        const CategoricalTable *table = marginal(spec, field);
        if (auto it = bucket.attributes.find(std::string(field)); it != bucket.attributes.end()) {
            table = &it->second;
        }
        profile.field(field) = draw(table, field, rng);
    }
    return profile;
}

std::vector<TripRecord> generate_synthetic(const SyntheticSpec &spec) {
    spec.validate();
    Rng rng = Rng::substream(spec.seed, "synthetic");
    std::vector<TripRecord> records;
    records.reserve(spec.population);
    for (std::size_t i = 0; i < spec.population; ++i) {
        TripRecord r;
        r.profile = sample_profile(spec, rng);
        const BucketTable &bucket = bucket_for(spec, r.profile.field(spec.bucket_attribute));
        r.desire.trip_purpose = draw(marginal(spec, schema::kTripPurpose), schema::kTripPurpose, rng);
        r.desire.start_time = std::stoi(draw(marginal(spec, schema::kStartTime), schema::kStartTime, rng));
        r.primary_mode = draw(&bucket.primary_mode, schema::kPrimaryMode, rng);
        r.duration_minutes = draw(&bucket.duration_minutes, schema::kDurationMinutes, rng);
        records.push_back(std::move(r));
    }
    return records;
}

SyntheticSpec read_synthetic_spec(std::istream &in) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw InvalidSpec(fmt::format("synthetic spec is not valid JSON: {}", e.what()));
    }
    if (!root.is_object()) {
        throw InvalidSpec("synthetic spec must be a JSON object");
    }
    reject_unknown(root,
                   {"spec_version", "population", "seed", "bucket_attribute", "marginals",
                    "buckets"},
                   "spec");
    SyntheticSpec spec;
    try {
        spec.spec_version = root.at("spec_version").get<int>();
        if (spec.spec_version != SyntheticSpec::kVersion) {
            throw InvalidSpec(fmt::format("unsupported spec_version {} (expected {})",
                                          spec.spec_version, SyntheticSpec::kVersion));
        }
        spec.population = root.value("population", std::size_t{0});
        spec.seed = root.value("seed", std::uint64_t{0});
        spec.bucket_attribute = root.value("bucket_attribute", spec.bucket_attribute);
        const auto marginals = root.value("marginals", nlohmann::json::object());
        for (const auto &[field, table] : marginals.items()) {
            spec.marginals.emplace(field, table_from_json(table, "marginals." + field));
        }
        for (const auto &[value, b] : root.at("buckets").items()) {
            const std::string where = "buckets." + value;
            reject_unknown(b, {"primary_mode", "duration_minutes", "attributes"}, where);
            BucketTable bucket;
            bucket.primary_mode = table_from_json(b.at("primary_mode"), where);
            bucket.duration_minutes = table_from_json(b.at("duration_minutes"), where);
            const auto attributes = b.value("attributes", nlohmann::json::object());
            for (const auto &[field, table] : attributes.items()) {
                bucket.attributes.emplace(field, table_from_json(table, where + "." + field));
            }
            spec.buckets.emplace(value, std::move(bucket));
        }
    } catch (const nlohmann::json::exception &e) {
        throw InvalidSpec(fmt::format("synthetic spec: {}", e.what()));
    }
    spec.validate();
    return spec;
}

SyntheticSpec read_synthetic_spec(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw InvalidSpec(fmt::format("cannot open synthetic spec '{}'", path.string()));
    }
    return read_synthetic_spec(in);
}

void write_synthetic_spec(const SyntheticSpec &spec, std::ostream &out) {
    nlohmann::ordered_json root;
    root["spec_version"] = spec.spec_version;
    root["population"] = spec.population;
    root["seed"] = spec.seed;
    root["bucket_attribute"] = spec.bucket_attribute;
    root["marginals"] = spec.marginals;
    nlohmann::ordered_json buckets = nlohmann::ordered_json::object();
    for (const auto &[value, b] : spec.buckets) {
        nlohmann::ordered_json j;
        j["primary_mode"] = b.primary_mode;
        j["duration_minutes"] = b.duration_minutes;
        if (!b.attributes.empty()) {
            j["attributes"] = b.attributes;
        }
        buckets[value] = j;
    }
    root["buckets"] = buckets;
    out << root.dump(2) << '\n';
}

SyntheticSpec default_synthetic_spec() {
    SyntheticSpec spec;
    spec.population = 1000;
    spec.seed = 42;
    spec.marginals = {
        {"available_vehicles",
         {{"zero", 0.25}, {"one", 0.30}, {"two", 0.25}, {"three_plus", 0.15},
          {"unknown_num_vehicles", 0.05}}},
        {"trip_purpose",
         {{"eat", 0.10}, {"work", 0.25}, {"home", 0.25}, {"school", 0.05}, {"shop", 0.10},
          {"maintenance", 0.05}, {"social", 0.08}, {"recreation", 0.07},
          {"other_activity_type", 0.05}}},
        {"start_time",
         {{"6", 0.04}, {"7", 0.10}, {"8", 0.12}, {"9", 0.08}, {"10", 0.05}, {"11", 0.05},
          {"12", 0.08}, {"13", 0.06}, {"14", 0.05}, {"15", 0.06}, {"16", 0.08}, {"17", 0.11},
          {"18", 0.07}, {"19", 0.05}}},
    };
    spec.buckets["zero"] = {
        {{"walking", 0.45}, {"public_transit", 0.35}, {"biking", 0.15}, {"on_demand_auto", 0.05}},
        {{"20-30", 0.35}, {"30-40", 0.40}, {"40-50", 0.25}},
        {{"age_group", {{"Under 18", 0.05}, {"18-24", 0.35}, {"25-34", 0.35}, {"35-44", 0.10},
                        {"65+", 0.15}}},
         {"income_group", {{"Under $10k", 0.30}, {"$10k-$50k", 0.50}, {"$50k-$100k", 0.20}}},
         {"employment_status", {{"under_16", 0.05}, {"not_in_labor_force", 0.30},
                                {"unemployed", 0.20}, {"employed", 0.45}}},
         {"household_size", {{"1", 0.60}, {"2", 0.30}, {"3", 0.10}}},
         {"education", {{"k_12", 0.20}, {"high_school", 0.30}, {"some_college", 0.30},
                        {"bachelors_degree", 0.20}}}}};
    spec.buckets["one"] = {
        {{"private_auto", 0.40}, {"public_transit", 0.25}, {"walking", 0.20}, {"biking", 0.10},
         {"auto_passenger", 0.05}},
        {{"0-10", 0.10}, {"10-20", 0.50}, {"20-30", 0.40}},
        {{"age_group", {{"18-24", 0.10}, {"25-34", 0.40}, {"35-44", 0.30}, {"45-54", 0.20}}},
         {"income_group", {{"$10k-$50k", 0.20}, {"$50k-$100k", 0.60}, {"$100k-$150k", 0.20}}},
         {"employment_status", {{"not_in_labor_force", 0.10}, {"unemployed", 0.10},
                                {"employed", 0.80}}},
         {"household_size", {{"1", 0.30}, {"2", 0.50}, {"3", 0.20}}},
         {"education", {{"some_college", 0.30}, {"bachelors_degree", 0.50},
                        {"advanced_degree", 0.20}}}}};
    spec.buckets["two"] = {
        {{"private_auto", 0.60}, {"auto_passenger", 0.25}, {"walking", 0.10},
         {"public_transit", 0.05}},
        {{"0-10", 0.55}, {"10-20", 0.40}, {"20-30", 0.05}},
        {{"age_group", {{"35-44", 0.40}, {"45-54", 0.40}, {"55-64", 0.20}}},
         {"income_group", {{"$50k-$100k", 0.20}, {"$100k-$150k", 0.50}, {"$150k-$200k", 0.30}}},
         {"employment_status", {{"not_in_labor_force", 0.15}, {"employed", 0.85}}},
         {"household_size", {{"2", 0.20}, {"3", 0.40}, {"4", 0.40}}},
         {"education", {{"high_school", 0.20}, {"bachelors_degree", 0.40},
                        {"advanced_degree", 0.40}}}}};
    spec.buckets["three_plus"] = {
        {{"private_auto", 0.70}, {"auto_passenger", 0.20}, {"walking", 0.05},
         {"other_travel_mode", 0.05}},
        {{"0-10", 0.70}, {"10-20", 0.30}},
        {{"age_group", {{"45-54", 0.40}, {"55-64", 0.40}, {"65+", 0.20}}},
         {"income_group", {{"$150k-$200k", 0.30}, {"$200k-$300k", 0.40}, {"$300k+", 0.30}}},
         {"employment_status", {{"not_in_labor_force", 0.40}, {"employed", 0.60}}},
         {"household_size", {{"4", 0.30}, {"5", 0.40}, {"6", 0.20}, {"7", 0.10}}},
         {"education", {{"high_school", 0.20}, {"bachelors_degree", 0.30},
                        {"advanced_degree", 0.50}}}}};
    spec.buckets["unknown_num_vehicles"] = {
        {{"walking", 0.20}, {"biking", 0.10}, {"public_transit", 0.20}, {"private_auto", 0.30},
         {"auto_passenger", 0.10}, {"on_demand_auto", 0.10}},
        {{"0-10", 0.20}, {"10-20", 0.30}, {"20-30", 0.20}, {"30-40", 0.10}, {"40-50", 0.10},
         {"50-60", 0.10}},
        {}};
    return spec;
}

std::pair<std::vector<TripRecord>, std::vector<TripRecord>>
split_reference_validation(std::span<const TripRecord> records, std::size_t n_ref,
                           std::size_t n_val, std::uint64_t seed) {
    if (n_ref + n_val > records.size()) {
        throw NotEnoughRecords(fmt::format("cannot draw {} reference + {} validation from {} records",
                                           n_ref, n_val, records.size()));
    }
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::substream(seed, "graph-split");
    rng.shuffle(order);
    std::vector<std::size_t> ref_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_ref));
    std::vector<std::size_t> val_idx(order.begin() + static_cast<std::ptrdiff_t>(n_ref),
                                     order.begin() + static_cast<std::ptrdiff_t>(n_ref + n_val));
    std::sort(ref_idx.begin(), ref_idx.end());
    std::sort(val_idx.begin(), val_idx.end());
    std::pair<std::vector<TripRecord>, std::vector<TripRecord>> out;
    for (auto i : ref_idx) {
        out.first.push_back(records[i]);
    }
    for (auto i : val_idx) {
        out.second.push_back(records[i]);
    }
    return out;
}

} // namespace prefchain
