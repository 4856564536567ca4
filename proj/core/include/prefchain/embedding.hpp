#pragma once

#include "prefchain/schema.hpp"

#include <cstddef>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace prefchain {

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const noexcept { return values.size(); }

    friend bool operator==(const EmbeddingVector &, const EmbeddingVector &) = default;
};

/// Text -> vector. Implementations must be safe for concurrent embed() calls
/// and deterministic for identical input within a process.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual EmbeddingVector embed(std::string_view text) = 0;
    virtual std::string id() const = 0;
};

/// Canonical "key: value; ..." rendering of the six profile fields in schema
/// order. Equal profiles render to equal strings.
std::string profile_to_text(const AgentProfile &profile);

/// "purpose: <trip_purpose>; start_time: <hour>".
std::string desire_to_text(const Desire &desire);

/// Throws DimensionMismatch or ZeroVector.
double cosine_similarity(const EmbeddingVector &a, const EmbeddingVector &b);

/// Cosine clamped below at zero, so it can serve as an edge weight in [0, 1].
double similarity_weight(const EmbeddingVector &a, const EmbeddingVector &b);

/// Seed constant mixed into token hashes; fixed so vectors agree across runs.
inline constexpr std::uint64_t kHashEmbedSeed = 0x5eed'ca7e'601d'beefULL;
inline constexpr std::size_t kDefaultHashDimension = 256;

/// Bag-of-words feature hashing: lowercase alphanumeric tokens, one count per
/// token in bucket hash(token) mod dimension, then L2-normalized.
/// Throws EmptyText when no token is found, InvalidArgument when dimension < 8.
EmbeddingVector hash_embed(std::string_view text, std::size_t dimension = kDefaultHashDimension);

/// Offline provider backed by hash_embed.
class HashEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HashEmbeddingProvider(std::size_t dimension = kDefaultHashDimension);
    EmbeddingVector embed(std::string_view text) override;
    std::string id() const override;

private:
    std::size_t dimension_;
};

/// Memoizes an inner provider keyed by (provider id, text). Concurrent readers
/// share a lock; duplicate concurrent misses race benignly (last write wins,
/// values are identical).
class CachingEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit CachingEmbeddingProvider(std::shared_ptr<EmbeddingProvider> inner);
    EmbeddingVector embed(std::string_view text) override;
    std::string id() const override { return inner_->id(); }

    std::size_t cached_entries() const;

private:
    std::shared_ptr<EmbeddingProvider> inner_;
    std::string inner_id_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, EmbeddingVector> cache_;
};

} // namespace prefchain
