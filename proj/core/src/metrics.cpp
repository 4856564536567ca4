#include "prefchain/metrics.hpp"

#include "prefchain/error.hpp"

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace prefchain {

JointDistribution::JointDistribution(std::vector<std::string> groups, ChoiceCategorySet choices,
                                     std::vector<double> cells)
    : groups_(std::move(groups)), choices_(std::move(choices)), cells_(std::move(cells)) {
    if (groups_.empty() || cells_.size() != groups_.size() * choices_.size()) {
        throw InvalidArgument("joint distribution shape does not match its axes");
    }
    double total = 0.0;
    for (double c : cells_) {
        if (!(c >= 0.0)) {
            throw InvalidArgument(fmt::format("negative joint cell {}", c));
        }
        total += c;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw InvalidArgument(fmt::format("joint distribution sums to {}", total));
    }
}

bool JointDistribution::same_axes(const JointDistribution &other) const {
    return groups_ == other.groups_ && choices_ == other.choices_;
}

JointDistribution joint_from_samples(std::span<const GroupChoiceSample> samples,
                                     const std::vector<std::string> &groups,
                                     const ChoiceCategorySet &choices) {
    if (samples.empty()) {
        throw EmptySamples("cannot estimate a joint distribution from zero samples");
    }
    std::map<std::string_view, std::size_t> group_index;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        group_index.emplace(groups[g], g);
    }
    std::vector<double> counts(groups.size() * choices.size(), 0.0);
    for (const auto &[group, choice] : samples) {
        auto g = group_index.find(group);
        if (g == group_index.end()) {
            throw UnknownKey(fmt::format("sample group '{}' is not on the group axis", group));
        }
        auto c = choices.index_of(choice);
        if (!c) {
            throw UnknownKey(fmt::format("sample choice '{}' is not in '{}'", choice,
                                         choices.name()));
        }
        counts[g->second * choices.size() + *c] += 1.0;
    }
    const auto total = static_cast<double>(samples.size());
    for (double &c : counts) {
        c /= total;
    }
    return JointDistribution(groups, choices, std::move(counts));
}

namespace {

void require_same_axes(const JointDistribution &p, const JointDistribution &q) {
    if (!p.same_axes(q)) {
        throw AxisMismatch("joint distributions have different axes");
    }
}

std::vector<double> smoothed(const std::vector<double> &cells, double epsilon) {
    std::vector<double> out(cells);
    double total = 0.0;
    for (double &c : out) {
        c += epsilon;
        total += c;
    }
    for (double &c : out) {
        c /= total;
    }
    return out;
}

} // namespace

double kld(const JointDistribution &p, const JointDistribution &q, double epsilon) {
    require_same_axes(p, q);
    if (!(epsilon >= 0.0)) {
        throw InvalidArgument(fmt::format("KLD epsilon {} is negative", epsilon));
    }
    const auto ps = smoothed(p.cells(), epsilon);
    const auto qs = smoothed(q.cells(), epsilon);
    double sum = 0.0;
    for (std::size_t i = 0; i < ps.size(); ++i) {
        if (ps[i] > 0.0) {
            sum += ps[i] * std::log(ps[i] / qs[i]);
        }
    }
    // Rounding can leave a tiny negative value for identical tables.
    return std::max(0.0, sum);
}

double mae(const JointDistribution &p, const JointDistribution &q) {
    require_same_axes(p, q);
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        sum += std::abs(p.cells()[i] - q.cells()[i]);
    }
    return sum / static_cast<double>(p.size());
}

namespace {

template <typename Pred> double mean_of(const std::vector<MetricEntry> &entries, Pred pick) {
    if (entries.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (const auto &e : entries) {
        sum += pick(e);
    }
    return sum / static_cast<double>(entries.size());
}

std::vector<MetricEntry> for_choice(const std::vector<MetricEntry> &entries,
                                    std::string_view choice_set) {
    std::vector<MetricEntry> out;
    std::copy_if(entries.begin(), entries.end(), std::back_inserter(out),
                 [&](const MetricEntry &e) { return e.choice_set == choice_set; });
    return out;
}

} // namespace

double EvaluationReport::mean_kld() const {
    return mean_of(entries, [](const MetricEntry &e) { return e.kld; });
}

double EvaluationReport::mean_mae() const {
    return mean_of(entries, [](const MetricEntry &e) { return e.mae; });
}

double EvaluationReport::mean_kld(std::string_view choice_set) const {
    return mean_of(for_choice(entries, choice_set), [](const MetricEntry &e) { return e.kld; });
}

double EvaluationReport::mean_mae(std::string_view choice_set) const {
    return mean_of(for_choice(entries, choice_set), [](const MetricEntry &e) { return e.mae; });
}

const MetricEntry &EvaluationReport::entry(std::string_view choice_set,
                                           std::string_view dimension) const {
    for (const auto &e : entries) {
        if (e.choice_set == choice_set && e.dimension == dimension) {
            return e;
        }
    }
    throw UnknownKey(fmt::format("no metric entry for {}/{}", choice_set, dimension));
}

EvaluationReport evaluate_predictions(std::string predictor, std::span<const TripRecord> truth,
                                      const std::vector<ChoiceCategorySet> &choice_sets,
                                      const std::vector<std::vector<std::string>> &predicted,
                                      double epsilon) {
    if (predicted.size() != choice_sets.size()) {
        throw InvalidArgument("one prediction vector per choice set is required");
    }
    EvaluationReport report{std::move(predictor), {}};
    for (std::size_t c = 0; c < choice_sets.size(); ++c) {
        const auto &set = choice_sets[c];
        if (predicted[c].size() != truth.size()) {
            throw InvalidArgument(fmt::format("{} predictions for {} records in '{}'",
                                              predicted[c].size(), truth.size(), set.name()));
        }
        for (auto dimension : schema::kProfileFields) {
            std::vector<GroupChoiceSample> actual;
            std::vector<GroupChoiceSample> simulated;
            actual.reserve(truth.size());
            simulated.reserve(truth.size());
            for (std::size_t i = 0; i < truth.size(); ++i) {
                const auto &group = truth[i].profile.field(dimension);
                actual.emplace_back(group, truth[i].choice(set.name()));
                simulated.emplace_back(group, predicted[c][i]);
            }
            const auto &groups = schema::categories(dimension);
            const auto p = joint_from_samples(actual, groups, set);
            const auto q = joint_from_samples(simulated, groups, set);
            report.entries.push_back(
                {set.name(), std::string(dimension), kld(p, q, epsilon), mae(p, q)});
        }
    }
    return report;
}

void write_report_csv(std::span<const EvaluationReport> reports, std::ostream &out) {
    out << "predictor,choice_set,dimension,metric,value\n";
    for (const auto &report : reports) {
        std::vector<std::string> sets;
        for (const auto &e : report.entries) {
            out << fmt::format("{},{},{},kld,{:.10g}\n", report.predictor, e.choice_set,
                               e.dimension, e.kld);
            out << fmt::format("{},{},{},mae,{:.10g}\n", report.predictor, e.choice_set,
                               e.dimension, e.mae);
            if (std::find(sets.begin(), sets.end(), e.choice_set) == sets.end()) {
                sets.push_back(e.choice_set);
            }
        }
        for (const auto &set : sets) {
            out << fmt::format("{},{},mean,kld,{:.10g}\n", report.predictor, set,
                               report.mean_kld(set));
            out << fmt::format("{},{},mean,mae,{:.10g}\n", report.predictor, set,
                               report.mean_mae(set));
        }
    }
}

void write_report_json(std::span<const EvaluationReport> reports, std::ostream &out) {
    nlohmann::ordered_json root = nlohmann::ordered_json::object();
    for (const auto &report : reports) {
        nlohmann::ordered_json entry;
        entry["mean_kld"] = report.mean_kld();
        entry["mean_mae"] = report.mean_mae();
        nlohmann::ordered_json by_set = nlohmann::ordered_json::object();
        for (const auto &e : report.entries) {
            by_set[e.choice_set][e.dimension] = {{"kld", e.kld}, {"mae", e.mae}};
        }
        entry["dimensions"] = by_set;
        root[report.predictor] = entry;
    }
    out << root.dump(2) << '\n';
}

} // namespace prefchain
