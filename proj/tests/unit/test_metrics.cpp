#include <prefchain/error.hpp>
#include <prefchain/ingest.hpp>
#include <prefchain/metrics.hpp>
#include <prefchain/rng.hpp>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"

#include <cmath>
#include <sstream>

using namespace prefchain;

namespace {

ChoiceCategorySet two() { return ChoiceCategorySet("c", {"walk", "bike"}); }

JointDistribution single(std::vector<double> cells) {
    return JointDistribution({"g"}, two(), std::move(cells));
}

JointDistribution random_joint(Rng &rng, std::size_t groups, const ChoiceCategorySet &set,
                               double zero_prob = 0.0) {
    std::vector<std::string> names;
    for (std::size_t g = 0; g < groups; ++g) {
        names.push_back("g" + std::to_string(g));
    }
    std::vector<double> cells(groups * set.size());
    double total = 0;
    for (auto &c : cells) {
        c = rng.uniform() < zero_prob ? 0.0 : rng.uniform();
        total += c;
    }
    for (auto &c : cells) {
        c /= total;
    }
    return JointDistribution(names, set, cells);
}

} // namespace

TEST(JointFromSamples, SingleCell) {
    std::vector<GroupChoiceSample> s(4, {"g1", "walk"});
    auto j = joint_from_samples(s, {"g1", "g2"}, two());
    EXPECT_EQ(j.cells(), (std::vector<double>{1, 0, 0, 0}));
}

TEST(JointFromSamples, TwoCells) {
    std::vector<GroupChoiceSample> s = {{"g1", "walk"}, {"g2", "bike"}, {"g1", "walk"},
                                        {"g2", "bike"}};
    auto j = joint_from_samples(s, {"g1", "g2"}, two());
    EXPECT_EQ(j.cells(), (std::vector<double>{0.5, 0, 0, 0.5}));
}

TEST(JointFromSamples, Errors) {
    std::vector<GroupChoiceSample> none;
    EXPECT_THROW(joint_from_samples(none, {"g1"}, two()), EmptySamples);
    std::vector<GroupChoiceSample> bad_group = {{"g9", "walk"}};
    EXPECT_THROW(joint_from_samples(bad_group, {"g1"}, two()), UnknownKey);
    std::vector<GroupChoiceSample> bad_choice = {{"g1", "fly"}};
    EXPECT_THROW(joint_from_samples(bad_choice, {"g1"}, two()), UnknownKey);
}

TEST(JointFromSamples, MatchesTallyOnSyntheticSamples) {
    auto spec = default_synthetic_spec();
    spec.population = 1000;
    spec.seed = 8;
    auto rs = generate_synthetic(spec);
    std::vector<GroupChoiceSample> samples;
    for (const auto &r : rs) {
        samples.emplace_back(r.profile.age_group, r.primary_mode);
    }
    const auto &groups = schema::categories(schema::kAgeGroup);
    const auto set = schema::primary_mode();
    auto j = joint_from_samples(samples, groups, set);
    auto counts = oracle::tally(samples);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (std::size_t c = 0; c < set.size(); ++c) {
            auto it = counts.find({groups[g], set.options()[c]});
            const double expected = it == counts.end() ? 0.0 : it->second / 1000.0;
            EXPECT_DOUBLE_EQ(j.cell(g, c), expected);
        }
    }
}

TEST(JointDistribution, ConstructorChecks) {
    EXPECT_THROW(single({0.5}), InvalidArgument);
    EXPECT_THROW(single({0.5, 0.4}), InvalidArgument);
    EXPECT_THROW(single({1.5, -0.5}), InvalidArgument);
}

TEST(Kld, Identity) { EXPECT_NEAR(kld(single({0.3, 0.7}), single({0.3, 0.7})), 0.0, 1e-9); }

TEST(Kld, HandExample) {
    const double expected = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
    EXPECT_NEAR(expected, 0.5108, 1e-4);
    EXPECT_NEAR(kld(single({0.5, 0.5}), single({0.9, 0.1})), expected, 1e-8);
}

TEST(Kld, ZeroCellIsFinite) {
    const double v = kld(single({0.5, 0.5}), single({1.0, 0.0}));
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GT(v, 5.0);
    EXPECT_NEAR(v, oracle::reference_kld({0.5, 0.5}, {1.0, 0.0}, 1e-9), 1e-12);
}

TEST(Kld, AxisMismatch) {
    auto a = single({0.5, 0.5});
    auto b = JointDistribution({"h"}, two(), {0.5, 0.5});
    EXPECT_THROW(kld(a, b), AxisMismatch);
    EXPECT_THROW(mae(a, b), AxisMismatch);
}

TEST(Kld, MatchesReferenceAndGibbs) {
    Rng rng(1);
    const auto set = schema::primary_mode();
    for (int t = 0; t < 100; ++t) {
        auto p = random_joint(rng, 7, set, 0.3);
        auto q = random_joint(rng, 7, set, 0.3);
        const double v = kld(p, q);
        EXPECT_NEAR(v, oracle::reference_kld(p.cells(), q.cells(), 1e-9), 1e-9);
        EXPECT_GE(v, 0.0);
        EXPECT_TRUE(std::isfinite(v));
        EXPECT_NEAR(kld(p, p), 0.0, 1e-9);
    }
}

TEST(Mae, Examples) {
    EXPECT_EQ(mae(single({0.3, 0.7}), single({0.3, 0.7})), 0.0);
    EXPECT_DOUBLE_EQ(mae(single({1, 0}), single({0, 1})), 1.0);
}

TEST(Mae, MatchesSummationAndBounds) {
    Rng rng(2);
    const auto set = schema::primary_mode();
    for (int t = 0; t < 100; ++t) {
        auto p = random_joint(rng, 7, set);
        auto q = random_joint(rng, 7, set);
        double total = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            total += std::abs(p.cells()[i] - q.cells()[i]);
        }
        const double v = mae(p, q);
        EXPECT_NEAR(v, total / 49.0, 1e-12);
        EXPECT_EQ(v, mae(q, p));
        EXPECT_LE(v, 2.0 / 49.0);
    }
}

TEST(Evaluate, PerfectPredictionsScoreZero) {
    auto spec = default_synthetic_spec();
    spec.population = 300;
    spec.seed = 4;
    auto rs = generate_synthetic(spec);
    std::vector<ChoiceCategorySet> sets = {schema::primary_mode(), schema::duration_minutes()};
    std::vector<std::vector<std::string>> predicted(2);
    for (const auto &r : rs) {
        predicted[0].push_back(r.primary_mode);
        predicted[1].push_back(r.duration_minutes);
    }
    auto report = evaluate_predictions("truth", rs, sets, predicted);
    EXPECT_EQ(report.entries.size(), 12u);
    for (const auto &e : report.entries) {
        EXPECT_NEAR(e.kld, 0.0, 1e-9);
        EXPECT_EQ(e.mae, 0.0);
    }
    EXPECT_NO_THROW(report.entry("primary_mode", "age_group"));
    EXPECT_THROW(report.entry("primary_mode", "shoe_size"), UnknownKey);
}

TEST(Evaluate, EntryMatchesDirectJoint) {
    auto spec = default_synthetic_spec();
    spec.population = 200;
    spec.seed = 6;
    auto rs = generate_synthetic(spec);
    Rng rng(6);
    const auto set = schema::primary_mode();
    std::vector<std::vector<std::string>> predicted(1);
    std::vector<GroupChoiceSample> truth, pred;
    for (const auto &r : rs) {
        predicted[0].push_back(set.options()[rng.below(set.size())]);
        truth.emplace_back(r.profile.income_group, r.primary_mode);
        pred.emplace_back(r.profile.income_group, predicted[0].back());
    }
    auto report = evaluate_predictions("x", rs, {set}, predicted);
    const auto &groups = schema::categories(schema::kIncomeGroup);
    auto p = joint_from_samples(truth, groups, set);
    auto q = joint_from_samples(pred, groups, set);
    const auto &e = report.entry("primary_mode", "income_group");
    EXPECT_DOUBLE_EQ(e.kld, kld(p, q));
    EXPECT_DOUBLE_EQ(e.mae, mae(p, q));
    double mean = 0;
    for (const auto &x : report.entries) {
        mean += x.kld;
    }
    EXPECT_NEAR(report.mean_kld(), mean / 6.0, 1e-15);
}

TEST(Report, CsvAndJsonShape) {
    EvaluationReport r{"pc", {{"primary_mode", "age_group", 0.25, 0.01},
                              {"primary_mode", "education", 0.75, 0.03}}};
    std::vector<EvaluationReport> reports = {r};
    std::ostringstream csv;
    write_report_csv(reports, csv);
    EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')),
              "predictor,choice_set,dimension,metric,value");
    EXPECT_NE(csv.str().find("pc,primary_mode,age_group,kld,"), std::string::npos);
    EXPECT_NE(csv.str().find("pc,primary_mode,mean,kld,0.5"), std::string::npos);
    std::ostringstream js;
    write_report_json(reports, js);
    auto doc = nlohmann::json::parse(js.str());
    EXPECT_TRUE(doc.contains("pc"));
}
