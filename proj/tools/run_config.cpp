#include "run_config.hpp"

#include <prefchain/error.hpp>
#include <prefchain/remote.hpp>
#include <prefchain/rng.hpp>

#include <fmt/core.h>

#include <fstream>
#include <set>

namespace prefchain::cli {

namespace {

using nlohmann::json;

class Section {
public:
    Section(const json &doc, std::string name, std::set<std::string> allowed)
        : doc_(doc), name_(std::move(name)) {
        if (!doc_.is_object()) {
            throw ConfigError(fmt::format("config section '{}' must be an object", name_));
        }
        for (const auto &[key, _] : doc_.items()) {
            if (!allowed.contains(key)) {
                throw ConfigError(fmt::format("unknown config key '{}{}'", prefix(), key));
            }
        }
    }

    template <typename T> void read(const char *key, T &target) const {
        if (!doc_.contains(key)) {
            return;
        }
        try {
            target = doc_.at(key).get<T>();
        } catch (const json::exception &) {
            throw ConfigError(fmt::format("config key '{}{}' has the wrong type", prefix(), key));
        }
    }

    void read_path(const char *key, std::filesystem::path &target,
                   const std::filesystem::path &base) const {
        std::string text;
        read(key, text);
        if (!text.empty()) {
            std::filesystem::path p(text);
            target = p.is_absolute() || base.empty() ? p : base / p;
        }
    }

    std::optional<Section> child(const char *key, std::set<std::string> allowed) const {
        if (!doc_.contains(key)) {
            return std::nullopt;
        }
        return Section(doc_.at(key), prefix() + key, std::move(allowed));
    }

private:
    std::string prefix() const { return name_.empty() ? "" : name_ + "."; }

    const json &doc_;
    std::string name_;
};

} // namespace

RunConfig RunConfig::from_json(const json &doc, const std::filesystem::path &base_dir) {
    const Section root(doc, "",
                       {"reference_csv", "validation_csv", "city", "synthetic_spec", "query",
                        "output_dir", "seed", "providers", "pipeline", "generation", "evaluate",
                        "sweep", "simulate"});
    RunConfig c;
    root.read_path("reference_csv", c.reference_csv, base_dir);
    root.read_path("validation_csv", c.validation_csv, base_dir);
    root.read_path("city", c.city, base_dir);
    root.read_path("synthetic_spec", c.synthetic_spec, base_dir);
    root.read_path("query", c.query, base_dir);
    root.read_path("output_dir", c.output_dir, base_dir);
    root.read("seed", c.seed);

    if (auto s = root.child("providers", {"mock_embed", "mock_llm", "embed_url", "embed_model",
                                          "embed_fallback_to_hash", "llm_url", "llm_retries",
                                          "timeout_seconds"})) {
        auto &p = c.providers;
        s->read("mock_embed", p.mock_embed);
        s->read("mock_llm", p.mock_llm);
        s->read("embed_url", p.embed_url);
        s->read("embed_model", p.embed_model);
        s->read("embed_fallback_to_hash", p.embed_fallback_to_hash);
        s->read("llm_url", p.llm_url);
        s->read("llm_retries", p.llm_retries);
        s->read("timeout_seconds", p.timeout_seconds);
    }
    if (auto s = root.child("pipeline", {"top_k", "search_depth", "max_path_edges", "epsilon",
                                         "tau", "blend", "max_in_flight"})) {
        auto &p = c.pipeline;
        s->read("top_k", p.top_k);
        s->read("search_depth", p.search_depth);
        s->read("max_path_edges", p.max_path_edges);
        s->read("epsilon", p.epsilon);
        s->read("tau", p.tau);
        s->read("blend", p.blend);
        s->read("max_in_flight", p.max_in_flight);
    }
    if (auto s = root.child("generation",
                            {"model", "temperature", "top_p", "top_k", "repeat_penalty", "think"})) {
        auto &g = c.pipeline.generation;
        s->read("model", g.model);
        s->read("temperature", g.temperature);
        s->read("top_p", g.top_p);
        s->read("top_k", g.top_k);
        s->read("repeat_penalty", g.repeat_penalty);
        s->read("think", g.think);
    }
    if (auto s = root.child("evaluate", {"baselines"})) {
        s->read("baselines", c.baselines);
    }
    if (auto s = root.child("sweep", {"sizes", "seeds"})) {
        s->read("sizes", c.sweep_sizes);
        s->read("seeds", c.sweep_seeds);
    }
    if (auto s = root.child("simulate", {"agents", "schedule", "reference_tally"})) {
        s->read("agents", c.simulate.agents);
        s->read("schedule", c.simulate.schedule);
        s->read_path("reference_tally", c.simulate.reference_tally, base_dir);
    }
    c.validate();
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception &e) {
        throw ConfigError(fmt::format("config file '{}' is not valid JSON: {}", path.string(),
                                      e.what()));
    }
    return from_json(doc, path.parent_path());
}

void RunConfig::validate() const {
    const auto &p = pipeline;
    if (p.top_k == 0) {
        throw ConfigError("pipeline.top_k must be at least 1");
    }
    if (p.max_path_edges < 2) {
        throw ConfigError("pipeline.max_path_edges must be at least 2");
    }
    if (!(p.epsilon >= 0.0)) {
        throw ConfigError("pipeline.epsilon must be non-negative");
    }
    if (!(p.tau > 0.0)) {
        throw ConfigError("pipeline.tau must be positive");
    }
    if (!(p.blend >= 0.0 && p.blend <= 1.0)) {
        throw ConfigError("pipeline.blend must lie in [0, 1]");
    }
    if (p.max_in_flight == 0) {
        throw ConfigError("pipeline.max_in_flight must be at least 1");
    }
    if (providers.llm_retries < 0 || providers.timeout_seconds <= 0) {
        throw ConfigError("providers.llm_retries must be >= 0 and timeout_seconds > 0");
    }
    if (!providers.mock_embed && providers.embed_url.empty()) {
        throw ConfigError("providers.mock_embed is off but no embed_url is set");
    }
    if (!providers.mock_llm && providers.llm_url.empty()) {
        throw ConfigError("providers.mock_llm is off but no llm_url is set");
    }
    for (auto n : sweep_sizes) {
        if (n == 0) {
            throw ConfigError("sweep sizes must be positive");
        }
    }
    if (simulate.schedule != "template" && simulate.schedule != "llm") {
        throw ConfigError(
            fmt::format("simulate.schedule must be template or llm, not '{}'", simulate.schedule));
    }
}

json RunConfig::to_json() const {
    const auto &p = pipeline;
    const auto &g = pipeline.generation;
    return json{
        {"reference_csv", reference_csv.generic_string()},
        {"validation_csv", validation_csv.generic_string()},
        {"city", city.generic_string()},
        {"synthetic_spec", synthetic_spec.generic_string()},
        {"query", query.generic_string()},
        {"output_dir", output_dir.generic_string()},
        {"seed", seed},
        {"providers",
         {{"mock_embed", providers.mock_embed},
          {"mock_llm", providers.mock_llm},
          {"embed_url", providers.embed_url},
          {"embed_model", providers.embed_model},
          {"embed_fallback_to_hash", providers.embed_fallback_to_hash},
          {"llm_url", providers.llm_url},
          {"llm_retries", providers.llm_retries},
          {"timeout_seconds", providers.timeout_seconds}}},
        {"pipeline",
         {{"top_k", p.top_k},
          {"search_depth", p.search_depth},
          {"max_path_edges", p.max_path_edges},
          {"epsilon", p.epsilon},
          {"tau", p.tau},
          {"blend", p.blend},
          {"max_in_flight", p.max_in_flight}}},
        {"generation",
         {{"model", g.model},
          {"temperature", g.temperature},
          {"top_p", g.top_p},
          {"top_k", g.top_k},
          {"repeat_penalty", g.repeat_penalty},
          {"think", g.think}}},
        {"evaluate", {{"baselines", baselines}}},
        {"sweep", {{"sizes", sweep_sizes}, {"seeds", sweep_seeds}}},
        {"simulate",
         {{"agents", simulate.agents},
          {"schedule", simulate.schedule},
          {"reference_tally", simulate.reference_tally.generic_string()}}},
    };
}

std::string RunConfig::hash() const {
    auto doc = to_json();
    doc.erase("output_dir");
    return fmt::format("{:016x}", fnv1a64(doc.dump()));
}

Providers make_providers(const ProviderSettings &settings) {
    Providers out;
    const auto timeout = std::chrono::seconds(settings.timeout_seconds);
    std::shared_ptr<EmbeddingProvider> embed;
    if (settings.mock_embed) {
        embed = std::make_shared<HashEmbeddingProvider>();
    } else {
        embed = std::make_shared<HttpEmbeddingProvider>(settings.embed_url, settings.embed_model,
                                                        timeout);
        if (settings.embed_fallback_to_hash) {
            embed = std::make_shared<FallbackEmbeddingProvider>(std::move(embed));
        }
    }
    out.embedder = std::make_shared<CachingEmbeddingProvider>(std::move(embed));
    if (settings.mock_llm) {
        out.llm = std::make_shared<IdentityMockLlm>();
    } else {
        out.llm = std::make_shared<RetryingLlmProvider>(
            std::make_shared<HttpLlmProvider>(settings.llm_url, timeout), settings.llm_retries);
    }
    return out;
}

} // namespace prefchain::cli
