#pragma once

#include "prefchain/schema.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace prefchain {

/// Joint probability table over (population group, choice), row-major.
class JointDistribution {
public:
    /// Throws InvalidArgument on shape mismatch, negative cells, or a total
    /// that is not 1 within 1e-9.
    JointDistribution(std::vector<std::string> groups, ChoiceCategorySet choices,
                      std::vector<double> cells);

    const std::vector<std::string> &groups() const noexcept { return groups_; }
    const ChoiceCategorySet &choices() const noexcept { return choices_; }
    const std::vector<double> &cells() const noexcept { return cells_; }
    double cell(std::size_t group, std::size_t choice) const {
        return cells_[group * choices_.size() + choice];
    }
    std::size_t size() const noexcept { return cells_.size(); }

    bool same_axes(const JointDistribution &other) const;

private:
    std::vector<std::string> groups_;
    ChoiceCategorySet choices_;
    std::vector<double> cells_;
};

using GroupChoiceSample = std::pair<std::string, std::string>;

/// Counting estimator: cell = count / total. Throws EmptySamples, UnknownKey.
JointDistribution joint_from_samples(std::span<const GroupChoiceSample> samples,
                                     const std::vector<std::string> &groups,
                                     const ChoiceCategorySet &choices);

inline constexpr double kDefaultKldEpsilon = 1e-9;

/// sum P ln(P/Q) after adding epsilon to every cell of both tables and
/// renormalizing. Cells where P is 0 contribute 0. Throws AxisMismatch.
double kld(const JointDistribution &p, const JointDistribution &q,
           double epsilon = kDefaultKldEpsilon);

/// Mean absolute cell difference. Throws AxisMismatch.
double mae(const JointDistribution &p, const JointDistribution &q);

struct MetricEntry {
    std::string choice_set;
    std::string dimension;
    double kld = 0.0;
    double mae = 0.0;
};

/// KLD/MAE per (choice set, demographic dimension) for one predictor.
struct EvaluationReport {
    std::string predictor;
    std::vector<MetricEntry> entries;

    double mean_kld() const;
    double mean_mae() const;
    double mean_kld(std::string_view choice_set) const;
    double mean_mae(std::string_view choice_set) const;
    /// Throws UnknownKey.
    const MetricEntry &entry(std::string_view choice_set, std::string_view dimension) const;
};

/// Joint-vs-joint comparison over each profile field for each choice set.
/// `predicted[c][i]` is the predicted option of choice set `choice_sets[c]`
/// for `truth[i]`.
EvaluationReport evaluate_predictions(std::string predictor, std::span<const TripRecord> truth,
                                      const std::vector<ChoiceCategorySet> &choice_sets,
                                      const std::vector<std::vector<std::string>> &predicted,
                                      double epsilon = kDefaultKldEpsilon);

/// CSV with header "predictor,choice_set,dimension,metric,value"; one row per
/// metric per entry, then a "mean" row per choice set.
void write_report_csv(std::span<const EvaluationReport> reports, std::ostream &out);
/// JSON summary keyed by predictor.
void write_report_json(std::span<const EvaluationReport> reports, std::ostream &out);

} // namespace prefchain
