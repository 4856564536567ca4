#include "prefchain/pipeline.hpp"

#include "prefchain/error.hpp"
#include "prefchain/ingest.hpp"

#include <fmt/core.h>

#include <atomic>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

namespace prefchain {

PreferenceChain::PreferenceChain(const BehaviorGraph &graph, EmbeddingProvider &embedder,
                                 LlmProvider &llm, PipelineConfig config)
    : graph_(graph), embedder_(embedder), llm_(llm), config_(std::move(config)) {}

BehavioralSubgraph PreferenceChain::subgraph(const QueryAgent &agent) const {
    if (graph_.count(NodeKind::Person) == 0) {
        BehavioralSubgraph sub;
        for (const auto &set : graph_.choice_sets()) {
            sub.graph.register_choice_set(set);
        }
        sub.agent = sub.graph.add_node(NodeKind::Agent, profile_to_text(agent.profile),
                                       agent.profile.to_attributes());
        sub.source_ids.push_back(std::nullopt);
        return sub;
    }
    const auto persons = top_k_similar(graph_, agent, config_.top_k, embedder_);
    return extract_subgraph(graph_, agent, persons, embedder_, config_.search_depth, config_.tau);
}

ChoiceDecision PreferenceChain::decide_on(const BehavioralSubgraph &sub, const QueryAgent &agent,
                                          const ChoiceCategorySet &set) const {
    auto prior = prior_distribution(sub, set, config_.max_path_edges, config_.epsilon);
    auto calibration =
        calibrate(agent, prior, agent.context, llm_, config_.generation, config_.blend);
    return {std::move(prior), std::move(calibration)};
}

ChoiceDecision PreferenceChain::decide(const QueryAgent &agent,
                                       std::string_view choice_set) const {
    const ChoiceCategorySet *set = graph_.find_choice_set(choice_set);
    if (set == nullptr) {
        throw UnknownKey(fmt::format("choice set '{}' is not registered", choice_set));
    }
    return decide_on(subgraph(agent), agent, *set);
}

std::vector<ChoiceDecision> PreferenceChain::decide_all(const QueryAgent &agent) const {
    const auto sub = subgraph(agent);
    std::vector<ChoiceDecision> out;
    for (const auto &set : graph_.choice_sets()) {
        out.push_back(decide_on(sub, agent, set));
    }
    return out;
}

std::vector<std::vector<ChoiceDecision>>
PreferenceChain::decide_batch(std::span<const QueryAgent> agents) const {
    std::vector<std::vector<ChoiceDecision>> out(agents.size());
    parallel_for(agents.size(), config_.max_in_flight,
                 [&](std::size_t i) { out[i] = decide_all(agents[i]); });
    return out;
}

QueryAgent query_from_record(const TripRecord &record, std::string context) {
    return QueryAgent{record.profile, record.desire, std::move(context)};
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)> &task) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) {
            task(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                }
            }
        });
    }
    pool.clear();
    if (failure) {
        std::rethrow_exception(failure);
    }
}

std::string sample_option(const PreferenceDistribution &distribution, Rng &rng) {
    return distribution.choice_set().options()[rng.categorical(distribution.probabilities())];
}

std::vector<std::vector<std::string>> predict_choices(const PreferenceChain &chain,
                                                      std::span<const TripRecord> validation,
                                                      std::uint64_t seed) {
    const auto &sets = chain.graph().choice_sets();
    std::vector<std::vector<std::string>> out(sets.size(),
                                              std::vector<std::string>(validation.size()));
    parallel_for(validation.size(), chain.config().max_in_flight, [&](std::size_t i) {
        const auto decisions = chain.decide_all(query_from_record(validation[i]));
        Rng rng = Rng::substream(seed, "sampling", i);
        for (std::size_t c = 0; c < sets.size(); ++c) {
            out[c][i] = sample_option(decisions[c].posterior(), rng);
        }
    });
    return out;
}

std::vector<std::vector<std::string>>
predict_uniform(const std::vector<ChoiceCategorySet> &choice_sets, std::size_t count,
                std::uint64_t seed) {
    std::vector<std::vector<std::string>> out;
    for (const auto &set : choice_sets) {
        Rng rng = Rng::substream(seed, "baseline-uniform:" + set.name());
        std::vector<std::string> picks;
        picks.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            picks.push_back(set.options()[rng.below(set.size())]);
        }
        out.push_back(std::move(picks));
    }
    return out;
}

std::vector<std::vector<std::string>>
predict_marginal(const std::vector<ChoiceCategorySet> &choice_sets,
                 std::span<const TripRecord> reference, std::size_t count, std::uint64_t seed) {
    std::vector<std::vector<std::string>> out;
    for (const auto &set : choice_sets) {
        std::vector<double> counts(set.size(), 0.0);
        for (const auto &r : reference) {
            if (auto idx = set.index_of(r.choice(set.name()))) {
                counts[*idx] += 1.0;
            }
        }
        Rng rng = Rng::substream(seed, "baseline-marginal:" + set.name());
        std::vector<std::string> picks;
        picks.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            picks.push_back(set.options()[rng.categorical(counts)]);
        }
        out.push_back(std::move(picks));
    }
    return out;
}

std::vector<EvaluationReport> evaluate(std::span<const TripRecord> reference,
                                       std::span<const TripRecord> validation,
                                       EmbeddingProvider &embedder, LlmProvider &llm,
                                       const EvaluationOptions &options, std::uint64_t seed) {
    if (reference.empty()) {
        throw EmptyReference("reference data set is empty");
    }
    if (validation.empty()) {
        throw EmptySamples("validation data set is empty");
    }
    const BehaviorGraph graph = build_from_records(reference, options.graph);
    const PreferenceChain chain(graph, embedder, llm, options.pipeline);
    const auto &sets = graph.choice_sets();

    std::vector<EvaluationReport> reports;
    reports.push_back(evaluate_predictions("preference_chain", validation, sets,
                                           predict_choices(chain, validation, seed),
                                           options.kld_epsilon));
    if (options.include_baselines) {
        reports.push_back(evaluate_predictions("uniform", validation, sets,
                                               predict_uniform(sets, validation.size(), seed),
                                               options.kld_epsilon));
        reports.push_back(evaluate_predictions(
            "marginal", validation, sets,
            predict_marginal(sets, reference, validation.size(), seed), options.kld_epsilon));
    }
    return reports;
}

std::vector<SweepRow> sweep(std::span<const TripRecord> pool,
                            std::span<const TripRecord> validation,
                            std::span<const std::size_t> sizes,
                            std::span<const std::uint64_t> seeds, EmbeddingProvider &embedder,
                            LlmProvider &llm, const EvaluationOptions &options) {
    std::vector<SweepRow> rows;
    for (std::size_t size : sizes) {
        for (std::uint64_t seed : seeds) {
            const auto reference = split_reference_validation(pool, size, 0, seed).first;
            EvaluationOptions opts = options;
            opts.include_baselines = false;
            const auto reports = evaluate(reference, validation, embedder, llm, opts, seed);
            rows.push_back({size, seed, "mean_kld", reports.front().mean_kld()});
            rows.push_back({size, seed, "mean_mae", reports.front().mean_mae()});
        }
    }
    return rows;
}

void write_sweep_csv(std::span<const SweepRow> rows, std::ostream &out) {
    out << "reference_size,seed,metric,value\n";
    for (const auto &r : rows) {
        out << fmt::format("{},{},{},{:.10g}\n", r.reference_size, r.seed, r.metric, r.value);
    }
}

} // namespace prefchain
