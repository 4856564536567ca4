#include <prefchain/embedding.hpp>
#include <prefchain/error.hpp>
#include <prefchain/remote.hpp>
#include <prefchain/rng.hpp>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <thread>

using namespace prefchain;

namespace {

// Bucket oracle: FNV-1a over lowercase alphanumeric runs, counts per bucket.
std::map<std::size_t, double> buckets(const std::string &text, std::size_t dim) {
    std::map<std::size_t, double> out;
    std::string token;
    auto flush = [&] {
        if (token.empty()) {
            return;
        }
        std::uint64_t h = kHashEmbedSeed;
        for (unsigned char c : token) {
            h ^= c;
            h *= 1099511628211ULL;
        }
        out[h % dim] += 1.0;
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
    return out;
}

double oracle_cosine(const std::map<std::size_t, double> &a, const std::map<std::size_t, double> &b) {
    double dot = 0, na = 0, nb = 0;
    for (auto [k, v] : a) {
        na += v * v;
        if (auto it = b.find(k); it != b.end()) {
            dot += v * it->second;
        }
    }
    for (auto [k, v] : b) {
        nb += v * v;
    }
    return dot / std::sqrt(na * nb);
}

AgentProfile profile() { return {"25-34", "$50k-$100k", "employed", "2", "one", "bachelors_degree"}; }

class CountingProvider final : public EmbeddingProvider {
public:
    EmbeddingVector embed(std::string_view text) override {
        ++calls;
        return hash_embed(text, 16);
    }
    std::string id() const override { return "counting"; }
    std::atomic<int> calls{0};
};

/// Minimal local embedding server on an ephemeral port.
class EmbedServer {
public:
    explicit EmbedServer(std::function<void(const httplib::Request &, httplib::Response &)> h) {
        server_.Post("/api/embeddings", std::move(h));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~EmbedServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const {
        return "http://127.0.0.1:" + std::to_string(port_) + "/api/embeddings";
    }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

} // namespace

TEST(ProfileText, CanonicalOrder) {
    const auto text = profile_to_text(profile());
    EXPECT_EQ(text, "age_group: 25-34; income_group: $50k-$100k; employment_status: employed; "
                    "household_size: 2; available_vehicles: one; education: bachelors_degree");
    EXPECT_EQ(text, profile_to_text(profile()));
    std::size_t last = 0;
    for (auto field : schema::kProfileFields) {
        auto pos = text.find(std::string(field) + ":");
        ASSERT_NE(pos, std::string::npos);
        EXPECT_GE(pos, last);
        last = pos;
    }
}

TEST(ProfileText, DiffersOnlyInChangedClause) {
    auto other = profile();
    other.education = "advanced_degree";
    auto a = profile_to_text(profile());
    auto b = profile_to_text(other);
    EXPECT_NE(a, b);
    const std::string prefix = a.substr(0, a.find("education:"));
    EXPECT_EQ(b.substr(0, prefix.size()), prefix);
    EXPECT_EQ(b.substr(prefix.size()), "education: advanced_degree");
}

TEST(DesireText, Format) {
    EXPECT_EQ(desire_to_text({"work", 8}), "purpose: work; start_time: 8");
}

TEST(Cosine, Examples) {
    EmbeddingVector v{{0.3, -1.2, 4.0}};
    EXPECT_NEAR(cosine_similarity(v, v), 1.0, 1e-12);
    EXPECT_NEAR(cosine_similarity({{1, 0}}, {{0, 1}}), 0.0, 1e-15);
    // 32 / (sqrt(14) * sqrt(77))
    EXPECT_NEAR(cosine_similarity({{1, 2, 3}}, {{4, 5, 6}}), 0.9746318461970762, 1e-12);
}

TEST(Cosine, Errors) {
    EXPECT_THROW(cosine_similarity({{1, 2}}, {{1, 2, 3}}), DimensionMismatch);
    EXPECT_THROW(cosine_similarity({{0, 0}}, {{1, 2}}), ZeroVector);
}

TEST(Cosine, SymmetryAndScaleInvariance) {
    Rng rng(11);
    for (int t = 0; t < 200; ++t) {
        EmbeddingVector a, b;
        for (int i = 0; i < 9; ++i) {
            a.values.push_back(rng.uniform() * 2 - 1);
            b.values.push_back(rng.uniform() * 2 - 1);
        }
        const double c = cosine_similarity(a, b);
        EXPECT_NEAR(c, cosine_similarity(b, a), 1e-12);
        EmbeddingVector scaled = a;
        const double k = 0.01 + 100 * rng.uniform();
        for (auto &x : scaled.values) {
            x *= k;
        }
        EXPECT_NEAR(cosine_similarity(scaled, b), c, 1e-9);
        const double w = similarity_weight(a, b);
        EXPECT_GE(w, 0.0);
        EXPECT_LE(w, 1.0);
    }
}

TEST(SimilarityWeight, Clamp) {
    EXPECT_EQ(similarity_weight({{1, 2}}, {{-1, -2}}), 0.0);
    EXPECT_NEAR(similarity_weight({{1, 2}}, {{1, 2}}), 1.0, 1e-12);
    EXPECT_EQ(similarity_weight({{1, 0}}, {{0, 3}}), 0.0);
}

TEST(HashEmbed, Deterministic) {
    auto a = hash_embed("Purpose: work; start_time: 8");
    auto b = hash_embed("Purpose: work; start_time: 8");
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.dimension(), kDefaultHashDimension);
    EXPECT_NEAR(cosine_similarity(hash_embed("a b c"), hash_embed("a b c")), 1.0, 1e-12);
}

TEST(HashEmbed, MatchesBucketOracle) {
    const std::string texts[] = {"a b c", "Hello, hello WORLD 42", profile_to_text(profile()),
                                 "purpose: eat; start_time: 12"};
    for (std::size_t dim : {8u, 64u, 256u}) {
        for (const auto &t : texts) {
            auto vec = hash_embed(t, dim);
            auto ref = buckets(t, dim);
            double norm = 0;
            for (auto [k, v] : ref) {
                norm += v * v;
            }
            norm = std::sqrt(norm);
            for (std::size_t i = 0; i < dim; ++i) {
                const double expected = ref.contains(i) ? ref.at(i) / norm : 0.0;
                EXPECT_NEAR(vec.values[i], expected, 1e-15) << t << " dim " << dim;
            }
        }
    }
}

TEST(HashEmbed, OverlapOrdering) {
    const double shared = oracle_cosine(buckets("a b c", 256), buckets("a b d", 256));
    const double disjoint = oracle_cosine(buckets("a b c", 256), buckets("x y z", 256));
    EXPECT_GT(shared, disjoint);
    EXPECT_NEAR(cosine_similarity(hash_embed("a b c"), hash_embed("a b d")), shared, 1e-12);
    EXPECT_NEAR(cosine_similarity(hash_embed("a b c"), hash_embed("x y z")), disjoint, 1e-12);
}

TEST(HashEmbed, Errors) {
    EXPECT_THROW(hash_embed("  ;; --"), EmptyText);
    EXPECT_THROW(hash_embed("text", 4), InvalidArgument);
    EXPECT_THROW(HashEmbeddingProvider(2), InvalidArgument);
}

TEST(CachingProvider, MemoizesByText) {
    auto inner = std::make_shared<CountingProvider>();
    CachingEmbeddingProvider cache(inner);
    EXPECT_EQ(cache.id(), "counting");
    auto a = cache.embed("one two");
    auto b = cache.embed("one two");
    cache.embed("three");
    EXPECT_EQ(a, b);
    EXPECT_EQ(inner->calls.load(), 2);
    EXPECT_EQ(cache.cached_entries(), 2u);
}

TEST(CachingProvider, ConcurrentCallsAgree) {
    auto inner = std::make_shared<CountingProvider>();
    CachingEmbeddingProvider cache(inner);
    std::vector<std::thread> threads;
    std::vector<EmbeddingVector> results(8);
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&, i] {
            for (int j = 0; j < 50; ++j) {
                results[i] = cache.embed("text " + std::to_string(j % 5));
            }
        });
    }
    for (auto &t : threads) {
        t.join();
    }
    for (const auto &r : results) {
        EXPECT_EQ(r, results[0]);
    }
    EXPECT_EQ(cache.cached_entries(), 5u);
}

TEST(HttpEndpoint, Parse) {
    auto e = HttpEndpoint::parse("http://localhost:11434/api/embeddings");
    EXPECT_EQ(e.host, "localhost");
    EXPECT_EQ(e.port, 11434);
    EXPECT_EQ(e.path, "/api/embeddings");
    auto d = HttpEndpoint::parse("http://example.org");
    EXPECT_EQ(d.port, 80);
    EXPECT_EQ(d.path, "/");
    EXPECT_THROW(HttpEndpoint::parse("https://example.org/x"), ConfigError);
    EXPECT_THROW(HttpEndpoint::parse("example.org"), ConfigError);
}

TEST(HttpEmbedding, RoundTripWithLocalServer) {
    nlohmann::json seen;
    EmbedServer server([&](const httplib::Request &req, httplib::Response &res) {
        seen = nlohmann::json::parse(req.body);
        res.set_content(R"({"embedding": [1.0, 2.0, 2.0]})", "application/json");
    });
    HttpEmbeddingProvider p(server.url(), "mxbai-embed-large");
    auto v = p.embed("hello");
    EXPECT_EQ(v.values, (std::vector<double>{1.0, 2.0, 2.0}));
    EXPECT_EQ(seen["model"], "mxbai-embed-large");
    EXPECT_EQ(seen["prompt"], "hello");
}

TEST(HttpEmbedding, BadBodyIsProviderError) {
    EmbedServer server([](const httplib::Request &, httplib::Response &res) {
        res.set_content(R"({"vector": [1]})", "application/json");
    });
    HttpEmbeddingProvider p(server.url(), "m");
    EXPECT_THROW(p.embed("x"), ProviderError);
}

TEST(HttpEmbedding, UnreachableFallsBackOnlyWhenWrapped) {
    auto remote = std::make_shared<HttpEmbeddingProvider>("http://127.0.0.1:9/none", "m",
                                                          std::chrono::milliseconds(500));
    EXPECT_THROW(remote->embed("x"), ProviderError);
    FallbackEmbeddingProvider fallback(remote);
    EXPECT_EQ(fallback.embed("a b"), hash_embed("a b"));
}
