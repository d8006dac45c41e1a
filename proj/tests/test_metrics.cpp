#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "wildfire/metrics.hpp"
#include "wildfire/rng.hpp"

using namespace wildfire;

TEST_CASE("ordinal IoU hand values") {
    CHECK(metrics::ordinal_iou(std::vector<int>{2, 1, 0}, std::vector<int>{2, 1, 0}) == 1.0);
    // min-sum 0+1+0 = 1, max-sum 2+2+1 = 5
    CHECK(metrics::ordinal_iou(std::vector<int>{2, 1, 0}, std::vector<int>{0, 2, 1}) ==
          doctest::Approx(0.2));
    CHECK(metrics::ordinal_iou(std::vector<int>{0, 0}, std::vector<int>{0, 0}) == 1.0);
    CHECK(metrics::ordinal_iou(std::vector<int>{0, 0}, std::vector<int>{4, 4}) == 0.0);
    CHECK_THROWS_AS(metrics::ordinal_iou(std::vector<int>{1}, std::vector<int>{1, 2}),
                    core::ValidationError);
    CHECK_THROWS_AS(metrics::ordinal_iou(std::vector<int>{}, std::vector<int>{}),
                    core::ValidationError);
}

TEST_CASE("ordinal IoU equals the brute-force ratio on random vectors") {
    rng::Engine eng(11);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<int> truth, pred;
        for (int i = 0; i < 100; ++i) {
            truth.push_back(static_cast<int>(eng.uniform_index(5)));
            pred.push_back(static_cast<int>(eng.uniform_index(5)));
        }
        double num = 0.0, den = 0.0;
        for (int i = 0; i < 100; ++i) {
            num += std::min(truth[i], pred[i]);
            den += std::max(truth[i], pred[i]);
        }
        CHECK(metrics::ordinal_iou(truth, pred) == doctest::Approx(num / den).epsilon(1e-12));
    }
}

TEST_CASE("per-class jaccard against set counting") {
    const std::vector<int> truth{0, 1, 1, 2, 2, 2, 4};
    const std::vector<int> pred{0, 1, 2, 2, 1, 2, 4};
    const auto j = metrics::per_class_jaccard(truth, pred);
    // class 0: intersection 1, union 1
    CHECK(*j.per_class[0] == doctest::Approx(1.0));
    // class 1: truth {1,2}, pred {1,4}; inter 1, union 3
    CHECK(*j.per_class[1] == doctest::Approx(1.0 / 3.0));
    // class 2: truth {3,4,5}, pred {2,3,5}; inter 2, union 4
    CHECK(*j.per_class[2] == doctest::Approx(0.5));
    CHECK_FALSE(j.per_class[3].has_value());
    CHECK(*j.per_class[4] == doctest::Approx(1.0));
    CHECK(j.macro_mean == doctest::Approx((1.0 + 1.0 / 3.0 + 0.5 + 1.0) / 4.0));
}

TEST_CASE("confusion matrix counts") {
    const std::vector<int> truth{0, 0, 1, 3, 4};
    const std::vector<int> pred{0, 1, 1, 3, 2};
    const auto cm = metrics::confusion_matrix(truth, pred);
    CHECK(cm[0][0] == 1);
    CHECK(cm[0][1] == 1);
    CHECK(cm[1][1] == 1);
    CHECK(cm[3][3] == 1);
    CHECK(cm[4][2] == 1);
    std::int64_t total = 0;
    for (const auto& row : cm)
        for (auto v : row) total += v;
    CHECK(total == 5);
}

TEST_CASE("evaluate bundles the pieces consistently") {
    const std::vector<int> truth{1, 2, 3, 0};
    const std::vector<int> pred{1, 2, 2, 0};
    const auto report =
        metrics::evaluate(core::TargetKind::NumFires, "validation", "gru", truth, pred);
    CHECK(report.split == "validation");
    CHECK(report.model == "gru");
    CHECK(report.n_samples == 4);
    CHECK(report.iou == metrics::ordinal_iou(truth, pred));
    CHECK(report.confusion[3][2] == 1);
}

TEST_CASE("target correlation matrix: diagonal one, constants undefined") {
    std::array<std::vector<int>, 4> labels;
    labels[0] = {0, 1, 2, 3, 4, 0, 1, 2};
    labels[1] = {0, 1, 2, 3, 4, 0, 1, 2};           // identical to 0
    labels[2] = {4, 3, 2, 1, 0, 4, 3, 2};           // reversed
    labels[3] = std::vector<int>(8, 2);             // constant
    const auto m = metrics::target_correlation_matrix(labels);
    CHECK(*m[0][0] == doctest::Approx(1.0));
    CHECK(*m[0][1] == doctest::Approx(1.0));
    CHECK(*m[0][2] == doctest::Approx(-1.0));
    CHECK_FALSE(m[0][3].has_value());
    CHECK_FALSE(m[3][3].has_value());
    CHECK(*m[2][1] == doctest::Approx(-1.0));
}

TEST_CASE("permutation importance separates informative from dead channels") {
    // Channel 0 carries the label exactly; channel 1 is noise the predictor
    // ignores. Predictor reads the last time step of channel 0.
    rng::Engine eng(5);
    metrics::ImportanceInput input;
    input.channel_names = {"signal", "noise"};
    for (int i = 0; i < 200; ++i) {
        const int label = static_cast<int>(eng.uniform_index(4)) + 1;
        std::vector<std::vector<double>> window(2, std::vector<double>(3, 0.0));
        window[0][2] = label;
        window[1][0] = eng.normal();
        input.windows.push_back(window);
        input.labels.push_back(label);
    }
    auto predict = [](const std::vector<std::vector<std::vector<double>>>& ws) {
        std::vector<int> out;
        for (const auto& w : ws)
            out.push_back(std::clamp(static_cast<int>(std::lround(w[0][2])), 0, 4));
        return out;
    };
    const auto imp = metrics::permutation_importance(predict, input, 123, 3);
    REQUIRE(imp.size() == 2);
    double signal = 0.0, noise = 1.0;
    for (const auto& fi : imp) {
        if (fi.feature == "signal") signal = fi.importance;
        if (fi.feature == "noise") noise = fi.importance;
    }
    CHECK(signal > 0.05);
    CHECK(noise == doctest::Approx(0.0));
    // Deterministic in the seed.
    const auto again = metrics::permutation_importance(predict, input, 123, 3);
    for (std::size_t i = 0; i < imp.size(); ++i)
        CHECK(imp[i].importance == again[i].importance);
    const auto other = metrics::permutation_importance(predict, input, 124, 3);
    bool differs = false;
    for (std::size_t i = 0; i < imp.size(); ++i)
        differs |= imp[i].importance != other[i].importance;
    CHECK(differs);
}
