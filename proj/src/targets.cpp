#include "wildfire/targets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "wildfire/rng.hpp"

namespace wildfire::targets {

namespace {

constexpr int k = 4;

double sum_of_squares(std::span<const double> sorted, const std::array<double, k>& centroids) {
    double objective = 0.0;
    for (double v : sorted) {
        double best = std::numeric_limits<double>::infinity();
        for (double c : centroids) best = std::min(best, (v - c) * (v - c));
        objective += best;
    }
    return objective;
}

// One Lloyd run from a k-means++ seeding; returns (centroids, objective).
std::pair<std::array<double, k>, double> lloyd_run(std::span<const double> values, rng::Engine& eng) {
    std::array<double, k> centroids{};
    // k-means++ seeding.
    centroids[0] = values[eng.uniform_index(values.size())];
    std::vector<double> dist2(values.size());
    for (int c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < c; ++j)
                best = std::min(best, (values[i] - centroids[j]) * (values[i] - centroids[j]));
            dist2[i] = best;
            total += best;
        }
        if (total <= 0.0) {
            centroids[c] = values[eng.uniform_index(values.size())];
            continue;
        }
        double pick = eng.uniform() * total;
        std::size_t idx = 0;
        for (; idx + 1 < values.size(); ++idx) {
            pick -= dist2[idx];
            if (pick <= 0.0) break;
        }
        centroids[c] = values[idx];
    }
    // Lloyd iterations.
    for (int iter = 0; iter < 300; ++iter) {
        std::array<double, k> sums{};
        std::array<std::size_t, k> counts{};
        for (double v : values) {
            int best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double d = (v - centroids[c]) * (v - centroids[c]);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            sums[best] += v;
            counts[best] += 1;
        }
        std::array<double, k> next = centroids;
        for (int c = 0; c < k; ++c)
            if (counts[c] > 0) next[c] = sums[c] / static_cast<double>(counts[c]);
        bool converged = true;
        for (int c = 0; c < k; ++c)
            if (std::abs(next[c] - centroids[c]) > 1e-12) converged = false;
        centroids = next;
        if (converged) break;
    }
    std::sort(centroids.begin(), centroids.end());
    return {centroids, sum_of_squares(values, centroids)};
}

// Exact 1-D k-means via dynamic programming over the sorted values.
std::array<double, k> dp_centroids(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    std::vector<double> psum(n + 1, 0.0), psq(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        psum[i + 1] = psum[i] + sorted[i];
        psq[i + 1] = psq[i] + sorted[i] * sorted[i];
    }
    const auto seg_cost = [&](std::size_t i, std::size_t j) {  // [i, j) half-open
        const double s = psum[j] - psum[i];
        const double q = psq[j] - psq[i];
        return q - s * s / static_cast<double>(j - i);
    };
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(k + 1, std::vector<double>(n + 1, inf));
    std::vector<std::vector<std::size_t>> cut(k + 1, std::vector<std::size_t>(n + 1, 0));
    dp[0][0] = 0.0;
    for (int c = 1; c <= k; ++c) {
        for (std::size_t j = static_cast<std::size_t>(c); j <= n; ++j) {
            for (std::size_t i = static_cast<std::size_t>(c) - 1; i < j; ++i) {
                if (dp[c - 1][i] == inf) continue;
                const double cand = dp[c - 1][i] + seg_cost(i, j);
                if (cand < dp[c][j]) {
                    dp[c][j] = cand;
                    cut[c][j] = i;
                }
            }
        }
    }
    std::array<double, k> centroids{};
    std::size_t j = n;
    for (int c = k; c >= 1; --c) {
        const std::size_t i = cut[c][j];
        centroids[c - 1] = (psum[j] - psum[i]) / static_cast<double>(j - i);
        j = i;
    }
    return centroids;
}

}  // namespace

BinningModel fit_binning(std::span<const double> positive_values, core::TargetKind target,
                         std::uint64_t seed, int restarts) {
    std::set<double> distinct;
    for (double v : positive_values) {
        if (!(v > 0.0))
            throw core::ValidationError("values", "binning input must be strictly positive");
        distinct.insert(v);
    }
    if (static_cast<int>(distinct.size()) < k)
        throw core::ValidationError("values", "degenerate target distribution: fewer than 4 distinct positive values");

    rng::Engine eng(rng::derive_seed(seed, "binning:" + core::target_name(target)));
    std::array<double, k> best_centroids{};
    double best_objective = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        auto [centroids, objective] = lloyd_run(positive_values, eng);
        if (objective < best_objective - 1e-15 ||
            (std::abs(objective - best_objective) <= 1e-15 && centroids < best_centroids)) {
            best_objective = objective;
            best_centroids = centroids;
        }
    }
    // Lloyd restarts can miss the global optimum; the exact DP solution keeps
    // the fit optimal while the restarts preserve the documented tie-break.
    auto exact = dp_centroids(positive_values);
    std::sort(exact.begin(), exact.end());
    if (const double exact_obj = sum_of_squares(positive_values, exact);
        exact_obj < best_objective - 1e-15 ||
        (std::abs(exact_obj - best_objective) <= 1e-15 && exact < best_centroids)) {
        best_objective = exact_obj;
        best_centroids = exact;
    }
    BinningModel model;
    model.target = target;
    model.centroids = best_centroids;
    for (int c = 0; c < k - 1; ++c)
        model.boundaries[c] = 0.5 * (best_centroids[c] + best_centroids[c + 1]);
    return model;
}

core::RiskClass assign_class(double value, const BinningModel& model) {
    if (value < 0.0) throw core::ValidationError("value", "negative target value");
    if (value == 0.0) return core::RiskClass(0);
    // Nearest centroid; a value exactly on a boundary midpoint goes low.
    int cls = 0;
    for (int c = 0; c < 3; ++c)
        if (value > model.boundaries[c]) cls = c + 1;
    return core::RiskClass(1 + cls);
}

LabelTable build_labels(std::span<const core::DailyZoneRecord> dataset,
                        const BinningModel& num_fires, const BinningModel& intervention_time,
                        const BinningModel& resources) {
    LabelTable table;
    for (const auto& rec : dataset) {
        std::array<core::RiskClass, 4> row;
        row[static_cast<std::size_t>(core::TargetKind::DFE)] = rec.observed_dfe;
        row[static_cast<std::size_t>(core::TargetKind::NumFires)] =
            assign_class(static_cast<double>(rec.n_fires), num_fires);
        row[static_cast<std::size_t>(core::TargetKind::InterventionTime)] =
            assign_class(rec.total_intervention_minutes, intervention_time);
        row[static_cast<std::size_t>(core::TargetKind::Resources)] =
            assign_class(static_cast<double>(rec.engines_deployed), resources);
        table.labels[LabelKey{rec.zone, rec.date}] = row;
    }
    return table;
}

std::vector<double> positive_target_values(std::span<const core::DailyZoneRecord> dataset,
                                           core::TargetKind target, int first_year, int last_year) {
    std::vector<double> values;
    for (const auto& rec : dataset) {
        if (rec.date.year < first_year || rec.date.year > last_year) continue;
        double v = 0.0;
        switch (target) {
            case core::TargetKind::NumFires: v = rec.n_fires; break;
            case core::TargetKind::InterventionTime: v = rec.total_intervention_minutes; break;
            case core::TargetKind::Resources: v = rec.engines_deployed; break;
            case core::TargetKind::DFE:
                throw core::ValidationError("target", "DFE is not a binned target");
        }
        if (v > 0.0) values.push_back(v);
    }
    return values;
}

}  // namespace wildfire::targets
