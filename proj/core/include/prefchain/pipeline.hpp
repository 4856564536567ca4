#pragma once

#include "prefchain/behavior_graph.hpp"
#include "prefchain/embedding.hpp"
#include "prefchain/llm_remodel.hpp"
#include "prefchain/metrics.hpp"
#include "prefchain/preference.hpp"
#include "prefchain/retrieval.hpp"
#include "prefchain/rng.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace prefchain {

struct PipelineConfig {
    std::size_t top_k = kDefaultTopK;
    std::size_t search_depth = kDefaultSearchDepth;
    std::size_t max_path_edges = kDefaultMaxPathEdges;
    double epsilon = 0.0;
    double tau = kDefaultTau;
    double blend = 1.0;
    GenerationParams generation;
    /// Upper bound on concurrent provider calls in batch mode.
    std::size_t max_in_flight = 4;
};

struct ChoiceDecision {
    PreferenceDistribution prior;
    CalibrationResult calibration;

    const PreferenceDistribution &posterior() const noexcept { return calibration.posterior; }
};

/// Retrieval, path scoring and calibration over one immutable behavior graph.
/// The graph and providers must outlive the chain.
class PreferenceChain {
public:
    PreferenceChain(const BehaviorGraph &graph, EmbeddingProvider &embedder, LlmProvider &llm,
                    PipelineConfig config = {});

    const PipelineConfig &config() const noexcept { return config_; }
    const BehaviorGraph &graph() const noexcept { return graph_; }

    /// Subgraph for an agent. An empty graph yields a subgraph with only the
    /// agent node.
    BehavioralSubgraph subgraph(const QueryAgent &agent) const;

    /// Prior and calibrated posterior for one registered choice set.
    /// Throws UnknownKey when the set is not registered in the graph.
    ChoiceDecision decide(const QueryAgent &agent, std::string_view choice_set) const;

    /// One decision per registered choice set, sharing a single subgraph.
    std::vector<ChoiceDecision> decide_all(const QueryAgent &agent) const;

    /// decide_all for many agents; at most max_in_flight run concurrently and
    /// the output is index-aligned with the input.
    std::vector<std::vector<ChoiceDecision>> decide_batch(std::span<const QueryAgent> agents) const;

private:
    ChoiceDecision decide_on(const BehavioralSubgraph &sub, const QueryAgent &agent,
                             const ChoiceCategorySet &set) const;

    const BehaviorGraph &graph_;
    EmbeddingProvider &embedder_;
    LlmProvider &llm_;
    PipelineConfig config_;
};

QueryAgent query_from_record(const TripRecord &record, std::string context = {});

/// Runs `task(i)` for i in [0, count) on up to `workers` threads.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)> &task);

/// Draws one option per distribution from the given stream.
std::string sample_option(const PreferenceDistribution &distribution, Rng &rng);

/// Predicted options for each validation record, per choice set of the graph:
/// result[c][i]. Record i samples from substream ("sampling", i) of `seed`.
std::vector<std::vector<std::string>> predict_choices(const PreferenceChain &chain,
                                                      std::span<const TripRecord> validation,
                                                      std::uint64_t seed);

/// Baseline that samples uniformly over each choice set.
std::vector<std::vector<std::string>>
predict_uniform(const std::vector<ChoiceCategorySet> &choice_sets, std::size_t count,
                std::uint64_t seed);

/// Baseline that samples each choice from the reference records' marginal.
std::vector<std::vector<std::string>>
predict_marginal(const std::vector<ChoiceCategorySet> &choice_sets,
                 std::span<const TripRecord> reference, std::size_t count, std::uint64_t seed);

struct EvaluationOptions {
    PipelineConfig pipeline;
    GraphBuildConfig graph;
    bool include_baselines = false;
    double kld_epsilon = kDefaultKldEpsilon;
};

/// Builds the graph from `reference`, predicts every validation record and
/// scores the predictions. Baseline reports ("uniform", "marginal") follow the
/// Preference Chain report when requested. Throws EmptyReference.
std::vector<EvaluationReport> evaluate(std::span<const TripRecord> reference,
                                       std::span<const TripRecord> validation,
                                       EmbeddingProvider &embedder, LlmProvider &llm,
                                       const EvaluationOptions &options, std::uint64_t seed);

struct SweepRow {
    std::size_t reference_size = 0;
    std::uint64_t seed = 0;
    std::string metric;
    double value = 0.0;
};

/// For each size and seed: draw `size` reference records from `pool`, rebuild
/// the graph, evaluate on `validation`, and emit mean KLD and mean MAE rows.
std::vector<SweepRow> sweep(std::span<const TripRecord> pool,
                            std::span<const TripRecord> validation,
                            std::span<const std::size_t> sizes,
                            std::span<const std::uint64_t> seeds, EmbeddingProvider &embedder,
                            LlmProvider &llm, const EvaluationOptions &options);

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream &out);

} // namespace prefchain
