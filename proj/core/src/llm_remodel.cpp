#include "prefchain/llm_remodel.hpp"

#include "prefchain/embedding.hpp"
#include "prefchain/error.hpp"

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include <cmath>

namespace prefchain {

std::string IdentityMockLlm::complete(const std::string &prompt, const GenerationParams &) {
    const auto start = prompt.find(kPriorJsonMarker);
    if (start == std::string::npos) {
        return {};
    }
    const auto from = start + kPriorJsonMarker.size();
    const auto end = prompt.find('\n', from);
    return prompt.substr(from, end == std::string::npos ? std::string::npos : end - from);
}

std::string FixedResponseLlm::complete(const std::string &prompt, const GenerationParams &) {
    std::lock_guard lock(mutex_);
    prompts_.push_back(prompt);
    return response_;
}

std::size_t FixedResponseLlm::calls() const {
    std::lock_guard lock(mutex_);
    return prompts_.size();
}

std::vector<std::string> FixedResponseLlm::prompts() const {
    std::lock_guard lock(mutex_);
    return prompts_;
}

std::string RetryingLlmProvider::complete(const std::string &prompt,
                                          const GenerationParams &params) {
    for (int attempt = 0;; ++attempt) {
        try {
            return inner_->complete(prompt, params);
        } catch (const ProviderError &) {
            if (attempt >= max_retries_) {
                throw;
            }
        }
    }
}

std::string build_prompt(const QueryAgent &agent, const PreferenceDistribution &prior,
                         std::string_view context) {
    const auto &set = prior.choice_set();
    nlohmann::ordered_json prior_json = nlohmann::ordered_json::object();
    std::string listing;
    std::string option_names;
    for (std::size_t i = 0; i < set.size(); ++i) {
        const auto &option = set.options()[i];
        const double p = prior.probabilities()[i];
        prior_json[option] = p;
        listing += fmt::format("- {}: {:.3f}\n", option, p);
        option_names += (i == 0 ? "" : ", ") + option;
    }

    std::string prompt;
    prompt += "You are simulating the travel decision of one person.\n";
    prompt += fmt::format("Profile: {}\n", profile_to_text(agent.profile));
    prompt += fmt::format("Desire: {}\n", desire_to_text(agent.desire));
    prompt += fmt::format("Conditions: {}\n", context.empty() ? "none given" : context);
    prompt += fmt::format("Choices of similar people for {} (weights from the behavior graph):\n",
                          set.name());
    prompt += listing;
    prompt += fmt::format("{}{}\n", kPriorJsonMarker, prior_json.dump());
    prompt += fmt::format(
        "Treat these weights as a prior and adjust them for this person and the conditions. "
        "Answer with a single JSON object mapping each option ({}) to a probability, and "
        "nothing else.\n",
        option_names);
    return prompt;
}

namespace {

// Text of the first balanced {...} block, honoring JSON string quoting.
std::string_view first_json_object(std::string_view raw) {
    const auto start = raw.find('{');
    if (start == std::string_view::npos) {
        throw ParseFailure("response contains no JSON object");
    }
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}' && --depth == 0) {
            return raw.substr(start, i - start + 1);
        }
    }
    throw ParseFailure("unterminated JSON object in response");
}

} // namespace

std::vector<double> parse_response(std::string_view raw, const ChoiceCategorySet &choice_set) {
    nlohmann::json object;
    try {
        object = nlohmann::json::parse(first_json_object(raw));
    } catch (const nlohmann::json::exception &e) {
        throw ParseFailure(fmt::format("malformed JSON in response: {}", e.what()));
    }
    std::vector<double> probabilities(choice_set.size(), 0.0);
    for (const auto &[key, value] : object.items()) {
        const auto idx = choice_set.index_of(key);
        if (!idx) {
            throw ParseFailure(fmt::format("unknown option '{}' for '{}'", key, choice_set.name()));
        }
        if (!value.is_number()) {
            throw ParseFailure(fmt::format("value for '{}' is not a number", key));
        }
        const double p = value.get<double>();
        if (!std::isfinite(p)) {
            throw ParseFailure(fmt::format("value for '{}' is not finite", key));
        }
        probabilities[*idx] = std::max(0.0, p);
    }
    double total = 0.0;
    for (double p : probabilities) {
        total += p;
    }
    if (!(total > 0.0)) {
        throw ParseFailure("response assigns zero probability to every option");
    }
    if (std::abs(total - 1.0) > 1e-12) {
        for (double &p : probabilities) {
            p /= total;
        }
    }
    return probabilities;
}

std::string_view to_string(CalibrationSource source) {
    switch (source) {
    case CalibrationSource::LlmAccepted:
        return "llm_accepted";
    case CalibrationSource::FallbackPrior:
        return "fallback_prior";
    case CalibrationSource::DegenerateUniform:
        return "degenerate_uniform";
    }
    return "unknown";
}

CalibrationResult calibrate(const QueryAgent &agent, const PreferenceDistribution &prior,
                            std::string_view context, LlmProvider &provider,
                            const GenerationParams &params, double blend) {
    CalibrationResult result{prior,
                             prior.degenerate() ? CalibrationSource::DegenerateUniform
                                                : CalibrationSource::FallbackPrior,
                             {}};
    try {
        result.raw_response = provider.complete(build_prompt(agent, prior, context), params);
        auto answer = parse_response(result.raw_response, prior.choice_set());
        if (blend < 1.0) {
            const double lambda = std::clamp(blend, 0.0, 1.0);
            for (std::size_t i = 0; i < answer.size(); ++i) {
                answer[i] = lambda * answer[i] + (1.0 - lambda) * prior.probabilities()[i];
            }
        }
        result.posterior = PreferenceDistribution(prior.choice_set(), std::move(answer));
        result.source = CalibrationSource::LlmAccepted;
    } catch (...) {
        // Every provider or parse failure keeps the prior.
        result.posterior = prior;
    }
    return result;
}

} // namespace prefchain
