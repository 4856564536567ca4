#pragma once

#include "prefchain/rng.hpp"
#include "prefchain/schema.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace prefchain {

/// Parses categorized trip rows. Columns may come in any order; unknown
/// columns are ignored; an optional household_id column carries household
/// links (empty cell = none). Throws MissingColumn, SchemaViolation.
std::vector<TripRecord> read_csv(std::istream &in);
std::vector<TripRecord> read_csv(const std::filesystem::path &path);

/// Canonical column order; household_id is appended only when some record has one.
void write_csv(std::span<const TripRecord> records, std::ostream &out);
void write_csv(std::span<const TripRecord> records, const std::filesystem::path &path);

/// value -> probability over one field's categories.
using CategoricalTable = std::map<std::string, double>;

/// Ground truth for one value of the bucket attribute.
struct BucketTable {
    CategoricalTable primary_mode;
    CategoricalTable duration_minutes;
    /// Optional per-bucket distributions replacing the global marginal of
    /// other profile fields, which correlates them with the bucket.
    std::map<std::string, CategoricalTable> attributes;
};

/// Seeded synthetic population description (versioned JSON on disk).
///
/// Sampling order per record: bucket attribute from its marginal; remaining
/// profile fields from the bucket's override or the marginal; trip purpose
/// and start hour from their marginals; mode and duration from the bucket.
/// Missing marginals are uniform. The bucket keyed "*" covers values without
/// their own bucket.
struct SyntheticSpec {
    static constexpr int kVersion = 1;

    int spec_version = kVersion;
    std::size_t population = 0;
    std::uint64_t seed = 0;
    std::string bucket_attribute = std::string(schema::kAvailableVehicles);
    std::map<std::string, CategoricalTable> marginals;
    std::map<std::string, BucketTable> buckets;

    /// Throws InvalidSpec.
    void validate() const;
};

/// Strongly conditioned default population: travel mode, duration and most
/// demographics depend on the number of available vehicles.
SyntheticSpec default_synthetic_spec();

/// Throws InvalidSpec for unknown keys, wrong version, or invalid tables.
SyntheticSpec read_synthetic_spec(std::istream &in);
SyntheticSpec read_synthetic_spec(const std::filesystem::path &path);
void write_synthetic_spec(const SyntheticSpec &spec, std::ostream &out);

/// Draws one profile following the spec's sampling order.
AgentProfile sample_profile(const SyntheticSpec &spec, Rng &rng);

/// Throws InvalidSpec. Identical spec (incl. seed) gives identical records.
std::vector<TripRecord> generate_synthetic(const SyntheticSpec &spec);

/// Disjoint seeded subsets of exact sizes, each kept in input order.
/// Throws NotEnoughRecords when n_ref + n_val exceeds the input.
std::pair<std::vector<TripRecord>, std::vector<TripRecord>>
split_reference_validation(std::span<const TripRecord> records, std::size_t n_ref,
                           std::size_t n_val, std::uint64_t seed);

} // namespace prefchain
