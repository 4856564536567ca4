#include "prefchain/remote.hpp"

#include "prefchain/error.hpp"

#include <fmt/core.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

namespace prefchain {

HttpEndpoint HttpEndpoint::parse(const std::string &url) {
    constexpr std::string_view scheme = "http://";
    if (url.rfind(scheme, 0) != 0) {
        throw ConfigError(fmt::format("provider URL '{}' must start with http://", url));
    }
    std::string rest = url.substr(scheme.size());
    HttpEndpoint ep;
    const auto slash = rest.find('/');
    std::string authority = rest.substr(0, slash);
    ep.path = slash == std::string::npos ? "/" : rest.substr(slash);
    const auto colon = authority.rfind(':');
    if (colon != std::string::npos) {
        try {
            ep.port = std::stoi(authority.substr(colon + 1));
        } catch (const std::exception &) {
            throw ConfigError(fmt::format("provider URL '{}' has an invalid port", url));
        }
        authority.resize(colon);
    }
    if (authority.empty()) {
        throw ConfigError(fmt::format("provider URL '{}' has no host", url));
    }
    ep.host = std::move(authority);
    return ep;
}

namespace {

nlohmann::json post_json(const HttpEndpoint &ep, const nlohmann::json &body,
                         std::chrono::milliseconds timeout) {
    httplib::Client client(ep.host, ep.port);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(ep.path, body.dump(), "application/json");
    if (!res) {
        throw ProviderError(fmt::format("request to {}:{}{} failed: {}", ep.host, ep.port, ep.path,
                                        httplib::to_string(res.error())));
    }
    if (res->status < 200 || res->status >= 300) {
        throw ProviderError(fmt::format("{}:{}{} answered HTTP {}", ep.host, ep.port, ep.path,
                                        res->status));
    }
    try {
        return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception &e) {
        throw ProviderError(fmt::format("provider returned invalid JSON: {}", e.what()));
    }
}

} // namespace

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string url, std::string model,
                                             std::chrono::milliseconds timeout)
    : endpoint_(HttpEndpoint::parse(url)), model_(std::move(model)), timeout_(timeout) {}

EmbeddingVector HttpEmbeddingProvider::embed(std::string_view text) {
    const auto reply =
        post_json(endpoint_, {{"model", model_}, {"prompt", std::string(text)}}, timeout_);
    if (!reply.is_object() || !reply.contains("embedding") || !reply["embedding"].is_array()) {
        throw ProviderError("embedding response lacks an \"embedding\" array");
    }
    EmbeddingVector vec;
    for (const auto &v : reply["embedding"]) {
        if (!v.is_number()) {
            throw ProviderError("embedding array contains a non-number");
        }
        vec.values.push_back(v.get<double>());
    }
    if (vec.values.empty()) {
        throw ProviderError("embedding response is empty");
    }
    return vec;
}

EmbeddingVector FallbackEmbeddingProvider::embed(std::string_view text) {
    try {
        return primary_->embed(text);
    } catch (const ProviderError &) {
        return fallback_.embed(text);
    }
}

HttpLlmProvider::HttpLlmProvider(std::string url, std::chrono::milliseconds timeout)
    : endpoint_(HttpEndpoint::parse(url)), timeout_(timeout) {}

std::string HttpLlmProvider::complete(const std::string &prompt, const GenerationParams &params) {
    const nlohmann::json body = {
        {"model", params.model},
        {"prompt", prompt},
        {"options",
         {{"temperature", params.temperature},
          {"top_p", params.top_p},
          {"top_k", params.top_k},
          {"repeat_penalty", params.repeat_penalty}}},
        {"stream", false},
        {"think", params.think},
    };
    const auto reply = post_json(endpoint_, body, timeout_);
    if (!reply.is_object() || !reply.contains("response") || !reply["response"].is_string()) {
        throw ProviderError("LLM response lacks a \"response\" text field");
    }
    return reply["response"].get<std::string>();
}

} // namespace prefchain
