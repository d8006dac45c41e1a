#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "wildfire/rng.hpp"
#include "wildfire/targets.hpp"

using namespace wildfire;

namespace {

// Exact optimal 1-D k-means objective by dynamic programming over the sorted
// values (interval costs from prefix sums), used as an oracle for the Lloyd
// fit.
double optimal_kmeans_objective(std::vector<double> values, int k) {
    std::sort(values.begin(), values.end());
    const int n = static_cast<int>(values.size());
    std::vector<double> pre(n + 1, 0.0), pre2(n + 1, 0.0);
    for (int i = 0; i < n; ++i) {
        pre[i + 1] = pre[i] + values[i];
        pre2[i + 1] = pre2[i] + values[i] * values[i];
    }
    auto cost = [&](int i, int j) {  // inclusive interval [i, j]
        const double s = pre[j + 1] - pre[i];
        const double s2 = pre2[j + 1] - pre2[i];
        const int m = j - i + 1;
        return s2 - s * s / m;
    };
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(k + 1, std::vector<double>(n + 1, inf));
    dp[0][0] = 0.0;
    for (int c = 1; c <= k; ++c)
        for (int j = 1; j <= n; ++j)
            for (int i = c; i <= j; ++i)
                if (dp[c - 1][i - 1] < inf)
                    dp[c][j] = std::min(dp[c][j], dp[c - 1][i - 1] + cost(i - 1, j - 1));
    return dp[k][n];
}

double fitted_objective(const std::vector<double>& values, const targets::BinningModel& model) {
    double objective = 0.0;
    for (double v : values) {
        double best = std::numeric_limits<double>::infinity();
        for (double c : model.centroids) best = std::min(best, (v - c) * (v - c));
        objective += best;
    }
    return objective;
}

}  // namespace

TEST_CASE("fit_binning reaches the exact dynamic-programming optimum") {
    rng::Engine eng(2024);
    for (int instance = 0; instance < 40; ++instance) {
        const int n = 20 + static_cast<int>(eng.uniform_index(120));
        std::vector<double> values;
        // Mixture of a few lognormal modes, all strictly positive.
        for (int i = 0; i < n; ++i) {
            const int mode = static_cast<int>(eng.uniform_index(3));
            values.push_back(eng.lognormal(0.5 + 1.1 * mode, 0.35));
        }
        const auto model = targets::fit_binning(values, core::TargetKind::NumFires, 100 + instance);
        const double got = fitted_objective(values, model);
        const double best = optimal_kmeans_objective(values, 4);
        CHECK(got == doctest::Approx(best).epsilon(1e-9));
        CHECK(got >= best - 1e-9);
    }
}

TEST_CASE("centroids are sorted and boundaries are midpoints") {
    rng::Engine eng(7);
    std::vector<double> values;
    for (int i = 0; i < 200; ++i) values.push_back(eng.lognormal(1.0, 1.0));
    const auto model = targets::fit_binning(values, core::TargetKind::InterventionTime, 11);
    for (int i = 0; i < 3; ++i) {
        CHECK(model.centroids[i] < model.centroids[i + 1]);
        CHECK(model.boundaries[i] ==
              doctest::Approx(0.5 * (model.centroids[i] + model.centroids[i + 1])).epsilon(1e-12));
    }
}

TEST_CASE("assign_class: zeros, nearest centroid, ties to the lower class") {
    targets::BinningModel model;
    model.centroids = {1.0, 3.0, 7.0, 15.0};
    model.boundaries = {2.0, 5.0, 11.0};
    CHECK(targets::assign_class(0.0, model).level == 0);
    CHECK(targets::assign_class(0.5, model).level == 1);
    CHECK(targets::assign_class(1.9, model).level == 1);
    CHECK(targets::assign_class(2.0, model).level == 1);  // tie -> lower
    CHECK(targets::assign_class(2.1, model).level == 2);
    CHECK(targets::assign_class(5.0, model).level == 2);  // tie -> lower
    CHECK(targets::assign_class(11.0, model).level == 3);
    CHECK(targets::assign_class(100.0, model).level == 4);
}

TEST_CASE("assign_class is monotone non-decreasing") {
    rng::Engine eng(3);
    std::vector<double> values;
    for (int i = 0; i < 300; ++i) values.push_back(eng.lognormal(1.2, 0.9));
    const auto model = targets::fit_binning(values, core::TargetKind::Resources, 5);
    int prev = 0;
    for (double v = 0.0; v < 60.0; v += 0.01) {
        const int cls = targets::assign_class(v, model).level;
        CHECK(cls >= prev);
        prev = cls;
    }
}

TEST_CASE("fit_binning rejects degenerate input") {
    CHECK_THROWS_AS(targets::fit_binning(std::vector<double>{1.0, 2.0, 3.0},
                                         core::TargetKind::NumFires, 1),
                    core::ValidationError);
    CHECK_THROWS_AS(
        targets::fit_binning(std::vector<double>{1.0, 1.0, 1.0, 1.0, 1.0, 2.0, 3.0},
                             core::TargetKind::NumFires, 1),
        core::ValidationError);
    CHECK_THROWS_AS(targets::fit_binning(std::vector<double>{0.0, 1.0, 2.0, 3.0, 4.0},
                                         core::TargetKind::NumFires, 1),
                    core::ValidationError);
}

TEST_CASE("fit is invariant to the order of the input values") {
    rng::Engine eng(17);
    std::vector<double> values;
    for (int i = 0; i < 150; ++i) values.push_back(eng.lognormal(1.0, 1.1));
    const auto a = targets::fit_binning(values, core::TargetKind::NumFires, 9);
    std::reverse(values.begin(), values.end());
    const auto b = targets::fit_binning(values, core::TargetKind::NumFires, 9);
    for (int i = 0; i < 4; ++i)
        CHECK(a.centroids[i] == doctest::Approx(b.centroids[i]).epsilon(1e-9));
}

TEST_CASE("build_labels passes DFE through and bins the operational targets") {
    std::vector<core::DailyZoneRecord> dataset;
    core::Date d{2021, 7, 1};
    rng::Engine eng(4);
    for (int i = 0; i < 60; ++i) {
        core::DailyZoneRecord r;
        r.zone = core::ZoneId{61};
        r.date = d;
        r.relative_humidity = 50.0;
        r.observed_dfe = core::RiskClass(i % 5);
        r.n_fires = static_cast<int>(eng.uniform_index(5));
        if (r.n_fires > 0) {
            r.total_intervention_minutes = 30.0 * r.n_fires + eng.uniform(0.0, 20.0);
            r.engines_deployed = r.n_fires + 1;
        }
        dataset.push_back(core::validate_record(r));
        d = core::next_day(d);
    }
    const auto fires = targets::positive_target_values(dataset, core::TargetKind::NumFires, 2021, 2021);
    const auto minutes =
        targets::positive_target_values(dataset, core::TargetKind::InterventionTime, 2021, 2021);
    const auto engines = targets::positive_target_values(dataset, core::TargetKind::Resources, 2021, 2021);
    for (double v : fires) CHECK(v > 0.0);
    CHECK(fires.size() == minutes.size());
    CHECK(fires.size() == engines.size());

    const auto bin_f = targets::fit_binning(fires, core::TargetKind::NumFires, 1);
    const auto bin_m = targets::fit_binning(minutes, core::TargetKind::InterventionTime, 1);
    const auto bin_e = targets::fit_binning(engines, core::TargetKind::Resources, 1);
    const auto labels = targets::build_labels(dataset, bin_f, bin_m, bin_e);
    REQUIRE(labels.labels.size() == dataset.size());
    for (const auto& r : dataset) {
        const targets::LabelKey key{r.zone, r.date};
        CHECK(labels.at(key, core::TargetKind::DFE) == r.observed_dfe);
        CHECK(labels.at(key, core::TargetKind::NumFires) ==
              targets::assign_class(r.n_fires, bin_f));
        if (r.n_fires == 0) {
            CHECK(labels.at(key, core::TargetKind::InterventionTime).level == 0);
            CHECK(labels.at(key, core::TargetKind::Resources).level == 0);
        }
    }
}

TEST_CASE("positive_target_values respects the year range") {
    std::vector<core::DailyZoneRecord> dataset;
    for (int year : {2020, 2021, 2022}) {
        core::DailyZoneRecord r;
        r.zone = core::ZoneId{62};
        r.date = {year, 7, 10};
        r.relative_humidity = 50.0;
        r.n_fires = 2;
        r.total_intervention_minutes = 90.0;
        r.engines_deployed = 3;
        dataset.push_back(core::validate_record(r));
    }
    CHECK(targets::positive_target_values(dataset, core::TargetKind::NumFires, 2020, 2021).size() == 2);
    CHECK(targets::positive_target_values(dataset, core::TargetKind::NumFires, 2022, 2022).size() == 1);
}
