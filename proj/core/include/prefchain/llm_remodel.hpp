#pragma once

#include "prefchain/preference.hpp"
#include "prefchain/retrieval.hpp"

#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

namespace prefchain {

/// Sampling parameters forwarded to the language model.
struct GenerationParams {
    std::string model = "qwen3:8b";
    double temperature = 0.6;
    double top_p = 0.95;
    int top_k = 20;
    double repeat_penalty = 1.0;
    /// Extended reasoning output; off by default.
    bool think = false;
};

class LlmProvider {
public:
    virtual ~LlmProvider() = default;
    /// Throws ProviderError on transport failure.
    virtual std::string complete(const std::string &prompt, const GenerationParams &params) = 0;
    virtual std::string id() const = 0;
};

/// Marker preceding the machine-readable prior inside every calibration prompt.
inline constexpr std::string_view kPriorJsonMarker = "Prior distribution (JSON): ";

/// Deterministic offline provider. Answers a calibration prompt by echoing the
/// prior JSON it carries; answers any other prompt with an empty string, which
/// callers treat as "no decision" and resolve with their fallback rule.
class IdentityMockLlm final : public LlmProvider {
public:
    std::string complete(const std::string &prompt, const GenerationParams &params) override;
    std::string id() const override { return "mock-identity"; }
};

/// Returns the same text for every prompt and records what it was asked.
class FixedResponseLlm final : public LlmProvider {
public:
    explicit FixedResponseLlm(std::string response) : response_(std::move(response)) {}
    std::string complete(const std::string &prompt, const GenerationParams &params) override;
    std::string id() const override { return "mock-fixed"; }

    std::size_t calls() const;
    std::vector<std::string> prompts() const;

private:
    std::string response_;
    mutable std::mutex mutex_;
    std::vector<std::string> prompts_;
};

/// Retries an inner provider on ProviderError; rethrows after the last attempt.
class RetryingLlmProvider final : public LlmProvider {
public:
    explicit RetryingLlmProvider(std::shared_ptr<LlmProvider> inner, int max_retries = 2)
        : inner_(std::move(inner)), max_retries_(max_retries) {}
    std::string complete(const std::string &prompt, const GenerationParams &params) override;
    std::string id() const override { return inner_->id(); }

private:
    std::shared_ptr<LlmProvider> inner_;
    int max_retries_;
};

/// Calibration prompt: profile, desire, context, every option with its prior
/// to three decimals, the prior as JSON, and the answer-format instruction.
std::string build_prompt(const QueryAgent &agent, const PreferenceDistribution &prior,
                         std::string_view context);

/// Reads the first JSON object in `raw` as option -> probability. Missing
/// options become 0, negatives are clamped to 0, and the result is rescaled
/// to sum 1 unless it already does within 1e-12. Throws ParseFailure for
/// malformed JSON, keys outside the set, non-numeric values, or all zeros.
std::vector<double> parse_response(std::string_view raw, const ChoiceCategorySet &choice_set);

enum class CalibrationSource { LlmAccepted, FallbackPrior, DegenerateUniform };

std::string_view to_string(CalibrationSource source);

struct CalibrationResult {
    PreferenceDistribution posterior;
    CalibrationSource source = CalibrationSource::FallbackPrior;
    std::string raw_response;
};

/// Sends the prior to the provider and adopts the parsed answer. With blend
/// below 1 the posterior is blend * answer + (1 - blend) * prior. Never
/// throws: provider or parse failures return the prior (DegenerateUniform
/// when the prior was the flagged uniform fallback, FallbackPrior otherwise).
CalibrationResult calibrate(const QueryAgent &agent, const PreferenceDistribution &prior,
                            std::string_view context, LlmProvider &provider,
                            const GenerationParams &params, double blend = 1.0);

} // namespace prefchain
