#pragma once

#include "prefchain/embedding.hpp"
#include "prefchain/llm_remodel.hpp"

#include <chrono>
#include <string>

namespace prefchain {

/// http://host[:port]/path split into its parts. Only plain HTTP is supported.
struct HttpEndpoint {
    std::string host;
    int port = 80;
    std::string path = "/";

    /// Throws ConfigError for anything but an http:// URL.
    static HttpEndpoint parse(const std::string &url);
};

/// POST {"model", "prompt"} -> {"embedding": [numbers]}.
class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    HttpEmbeddingProvider(std::string url, std::string model,
                          std::chrono::milliseconds timeout = std::chrono::seconds(30));
    /// Throws ProviderError on transport failure, non-2xx status, or a body
    /// without a numeric "embedding" array.
    EmbeddingVector embed(std::string_view text) override;
    std::string id() const override { return "http:" + model_; }

private:
    HttpEndpoint endpoint_;
    std::string model_;
    std::chrono::milliseconds timeout_;
};

/// Embeds remotely; on ProviderError falls back to hash_embed when enabled.
class FallbackEmbeddingProvider final : public EmbeddingProvider {
public:
    FallbackEmbeddingProvider(std::shared_ptr<EmbeddingProvider> primary,
                              std::size_t fallback_dimension = kDefaultHashDimension)
        : primary_(std::move(primary)), fallback_(fallback_dimension) {}
    EmbeddingVector embed(std::string_view text) override;
    std::string id() const override { return primary_->id() + "+hash"; }

private:
    std::shared_ptr<EmbeddingProvider> primary_;
    HashEmbeddingProvider fallback_;
};

/// POST {"model", "prompt", "options": {...}, "stream": false, "think": bool}
/// -> {"response": text}.
class HttpLlmProvider final : public LlmProvider {
public:
    explicit HttpLlmProvider(std::string url,
                             std::chrono::milliseconds timeout = std::chrono::seconds(120));
    /// Throws ProviderError.
    std::string complete(const std::string &prompt, const GenerationParams &params) override;
    std::string id() const override { return "http-llm"; }

private:
    HttpEndpoint endpoint_;
    std::chrono::milliseconds timeout_;
};

} // namespace prefchain
