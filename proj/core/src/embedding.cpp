#include "prefchain/embedding.hpp"

#include "prefchain/error.hpp"
#include "prefchain/rng.hpp"

#include <fmt/core.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <mutex>

namespace prefchain {

std::string profile_to_text(const AgentProfile &profile) {
    std::string out;
    for (auto name : schema::kProfileFields) {
        if (!out.empty()) {
            out += "; ";
        }
        out += fmt::format("{}: {}", name, profile.field(name));
    }
    return out;
}

std::string desire_to_text(const Desire &desire) {
    return fmt::format("purpose: {}; start_time: {}", desire.trip_purpose, desire.start_time);
}

double cosine_similarity(const EmbeddingVector &a, const EmbeddingVector &b) {
    if (a.dimension() != b.dimension()) {
        throw DimensionMismatch(
            fmt::format("cosine of vectors with dimensions {} and {}", a.dimension(),
                        b.dimension()));
    }
    double dot = 0.0;
    double norm_a = 0.0;
    double norm_b = 0.0;
    for (std::size_t i = 0; i < a.dimension(); ++i) {
        dot += a.values[i] * b.values[i];
        norm_a += a.values[i] * a.values[i];
        norm_b += b.values[i] * b.values[i];
    }
    if (norm_a == 0.0 || norm_b == 0.0) {
        throw ZeroVector("cosine similarity of an all-zero vector");
    }
    const double cosine = dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
    return std::clamp(cosine, -1.0, 1.0);
}

double similarity_weight(const EmbeddingVector &a, const EmbeddingVector &b) {
    return std::max(0.0, cosine_similarity(a, b));
}

EmbeddingVector hash_embed(std::string_view text, std::size_t dimension) {
    if (dimension < 8) {
        throw InvalidArgument(fmt::format("hash embedding dimension {} < 8", dimension));
    }
    EmbeddingVector vec{std::vector<double>(dimension, 0.0)};
    std::string token;
    std::size_t tokens = 0;
    auto flush = [&] {
        if (token.empty()) {
            return;
        }
        vec.values[fnv1a64(token, kHashEmbedSeed) % dimension] += 1.0;
        ++tokens;
        token.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            token.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
        }
    }
    flush();
    if (tokens == 0) {
        throw EmptyText("cannot embed text without alphanumeric tokens");
    }
    double norm = 0.0;
    for (double v : vec.values) {
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (double &v : vec.values) {
        v /= norm;
    }
    return vec;
}

HashEmbeddingProvider::HashEmbeddingProvider(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ < 8) {
        throw InvalidArgument(fmt::format("hash embedding dimension {} < 8", dimension_));
    }
}

EmbeddingVector HashEmbeddingProvider::embed(std::string_view text) {
    return hash_embed(text, dimension_);
}

std::string HashEmbeddingProvider::id() const { return fmt::format("hash-{}", dimension_); }

CachingEmbeddingProvider::CachingEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner)
    : inner_(std::move(inner)), inner_id_(inner_->id()) {}

EmbeddingVector CachingEmbeddingProvider::embed(std::string_view text) {
    std::string key = inner_id_;
    key.push_back('\x1f');
    key.append(text);
    {
        std::shared_lock lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) {
            return it->second;
        }
    }
    EmbeddingVector vec = inner_->embed(text);
    std::unique_lock lock(mutex_);
    cache_.insert_or_assign(std::move(key), vec);
    return vec;
}

std::size_t CachingEmbeddingProvider::cached_entries() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

} // namespace prefchain
