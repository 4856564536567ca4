#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prefchain {

// Every library failure derives from Error. The three intermediate classes
// decide the CLI exit code: ConfigError -> 2, DataError -> 3, ProviderError -> 4.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class ProviderError : public Error {
public:
    using Error::Error;
};

#define PREFCHAIN_DATA_ERROR(Name)                                                                 \
    class Name : public DataError {                                                                \
    public:                                                                                        \
        using DataError::DataError;                                                                \
    }

// behavior_graph
PREFCHAIN_DATA_ERROR(InvalidArgument);
PREFCHAIN_DATA_ERROR(UnknownNode);
PREFCHAIN_DATA_ERROR(WeightOutOfRange);
PREFCHAIN_DATA_ERROR(KindMismatch);
// embedding
PREFCHAIN_DATA_ERROR(DimensionMismatch);
PREFCHAIN_DATA_ERROR(ZeroVector);
PREFCHAIN_DATA_ERROR(EmptyText);
// retrieval / preference
PREFCHAIN_DATA_ERROR(EmptyGraph);
PREFCHAIN_DATA_ERROR(NotAnIntention);
// llm_remodel
PREFCHAIN_DATA_ERROR(ParseFailure);
// metrics
PREFCHAIN_DATA_ERROR(EmptySamples);
PREFCHAIN_DATA_ERROR(UnknownKey);
PREFCHAIN_DATA_ERROR(AxisMismatch);
// ingest
PREFCHAIN_DATA_ERROR(MissingColumn);
PREFCHAIN_DATA_ERROR(InvalidSpec);
PREFCHAIN_DATA_ERROR(NotEnoughRecords);
PREFCHAIN_DATA_ERROR(EmptyReference);
// mobility_sim
PREFCHAIN_DATA_ERROR(UnknownCategory);
PREFCHAIN_DATA_ERROR(InvalidCity);

#undef PREFCHAIN_DATA_ERROR

/// A record failed schema validation. `row` is 1-based over data rows (the
/// header is not counted); 0 means the failure is not tied to a row.
class SchemaViolation : public DataError {
public:
    SchemaViolation(std::size_t row, std::string column, std::string value);

    std::size_t row() const noexcept { return row_; }
    const std::string &column() const noexcept { return column_; }
    const std::string &value() const noexcept { return value_; }

private:
    std::size_t row_;
    std::string column_;
    std::string value_;
};

} // namespace prefchain
