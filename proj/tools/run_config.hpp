#pragma once

#include <prefchain/embedding.hpp>
#include <prefchain/llm_remodel.hpp>
#include <prefchain/pipeline.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace prefchain::cli {

struct ProviderSettings {
    bool mock_embed = true;
    bool mock_llm = true;
    std::string embed_url;
    std::string embed_model = "mxbai-embed-large";
    bool embed_fallback_to_hash = false;
    std::string llm_url;
    int llm_retries = 2;
    int timeout_seconds = 120;
};

struct SimulateSettings {
    std::size_t agents = 10;
    std::string schedule = "template";
    std::filesystem::path reference_tally;
};

/// Everything a command needs. Paths in a config file are relative to the
/// file's directory.
struct RunConfig {
    std::filesystem::path reference_csv;
    std::filesystem::path validation_csv;
    std::filesystem::path city;
    std::filesystem::path synthetic_spec;
    std::filesystem::path query;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    ProviderSettings providers;
    PipelineConfig pipeline;
    bool baselines = false;
    std::vector<std::size_t> sweep_sizes = {10, 20, 50, 100, 200};
    std::vector<std::uint64_t> sweep_seeds = {0, 1, 2};
    SimulateSettings simulate;

    /// Throws ConfigError on unknown keys, wrong types, or out-of-range knobs.
    static RunConfig from_json(const nlohmann::json &doc,
                               const std::filesystem::path &base_dir = {});
    static RunConfig load(const std::filesystem::path &path);

    /// Throws ConfigError.
    void validate() const;

    /// Canonical form: every field, sorted keys.
    nlohmann::json to_json() const;
    /// FNV-1a of the canonical JSON without output_dir, as 16 hex digits.
    std::string hash() const;
};

struct Providers {
    std::shared_ptr<EmbeddingProvider> embedder;
    std::shared_ptr<LlmProvider> llm;
};

/// Mock providers unless remote URLs are configured and mocks are off.
Providers make_providers(const ProviderSettings &settings);

} // namespace prefchain::cli
