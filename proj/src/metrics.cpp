#include "wildfire/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "wildfire/rng.hpp"

namespace wildfire::metrics {

namespace {

void check_pair(std::span<const int> truth, std::span<const int> predicted) {
    if (truth.empty()) throw core::ValidationError("truth", "empty class sequence");
    if (truth.size() != predicted.size())
        throw core::ValidationError("predicted", "length mismatch between truth and prediction");
    for (int c : truth)
        if (c < 0 || c >= core::num_risk_classes)
            throw core::ValidationError("truth", "class outside [0,4]");
    for (int c : predicted)
        if (c < 0 || c >= core::num_risk_classes)
            throw core::ValidationError("predicted", "class outside [0,4]");
}

}  // namespace

double ordinal_iou(std::span<const int> truth, std::span<const int> predicted) {
    check_pair(truth, predicted);
    std::int64_t min_sum = 0, max_sum = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        min_sum += std::min(truth[i], predicted[i]);
        max_sum += std::max(truth[i], predicted[i]);
    }
    if (max_sum == 0) return 1.0;  // all-quiet agreement
    return static_cast<double>(min_sum) / static_cast<double>(max_sum);
}

PerClassJaccard per_class_jaccard(std::span<const int> truth, std::span<const int> predicted) {
    check_pair(truth, predicted);
    PerClassJaccard result;
    double total = 0.0;
    int present = 0;
    for (int c = 0; c < core::num_risk_classes; ++c) {
        std::int64_t intersection = 0, uni = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            const bool t = truth[i] == c;
            const bool p = predicted[i] == c;
            intersection += (t && p) ? 1 : 0;
            uni += (t || p) ? 1 : 0;
        }
        if (uni == 0) continue;
        const double j = static_cast<double>(intersection) / static_cast<double>(uni);
        result.per_class[c] = j;
        total += j;
        ++present;
    }
    result.macro_mean = present > 0 ? total / present : 0.0;
    return result;
}

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted) {
    check_pair(truth, predicted);
    ConfusionMatrix m{};
    for (std::size_t i = 0; i < truth.size(); ++i) m[truth[i]][predicted[i]] += 1;
    return m;
}

EvaluationReport evaluate(core::TargetKind target, const std::string& split, const std::string& model,
                          std::span<const int> truth, std::span<const int> predicted) {
    EvaluationReport r;
    r.target = target;
    r.split = split;
    r.model = model;
    r.iou = ordinal_iou(truth, predicted);
    r.jaccard = per_class_jaccard(truth, predicted);
    r.confusion = confusion_matrix(truth, predicted);
    r.n_samples = truth.size();
    return r;
}

TargetCorrelationMatrix target_correlation_matrix(const std::array<std::vector<int>, 4>& labels) {
    const std::size_t n = labels[0].size();
    for (const auto& v : labels)
        if (v.size() != n) throw core::ValidationError("labels", "misaligned label vectors");
    if (n == 0) throw core::ValidationError("labels", "empty label vectors");

    std::array<double, 4> mean{};
    std::array<double, 4> var{};
    for (int t = 0; t < 4; ++t) {
        for (int v : labels[t]) mean[t] += v;
        mean[t] /= static_cast<double>(n);
        for (int v : labels[t]) var[t] += (v - mean[t]) * (v - mean[t]);
    }
    TargetCorrelationMatrix m;
    for (int a = 0; a < 4; ++a) {
        for (int b = 0; b < 4; ++b) {
            if (a == b) {
                m[a][b] = var[a] > 0.0 ? std::optional<double>(1.0) : std::nullopt;
                continue;
            }
            if (var[a] <= 0.0 || var[b] <= 0.0) {
                m[a][b] = std::nullopt;  // correlation with a constant is undefined
                continue;
            }
            double cov = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                cov += (labels[a][i] - mean[a]) * (labels[b][i] - mean[b]);
            m[a][b] = cov / std::sqrt(var[a] * var[b]);
        }
    }
    return m;
}

std::vector<FeatureImportance> permutation_importance(
    const std::function<std::vector<int>(const std::vector<std::vector<std::vector<double>>>&)>& predict,
    const ImportanceInput& input, std::uint64_t seed, int repeats) {
    if (repeats < 1) throw core::ValidationError("repeats", "repeats must be >= 1");
    if (input.windows.empty()) throw core::ValidationError("windows", "no windows");
    const std::size_t n_channels = input.channel_names.size();
    if (n_channels != input.windows[0].size())
        throw core::ValidationError("channel_names", "channel name count mismatch");

    const auto baseline_pred = predict(input.windows);
    const double baseline = ordinal_iou(input.labels, baseline_pred);

    std::vector<FeatureImportance> result;
    result.reserve(n_channels);
    for (std::size_t ch = 0; ch < n_channels; ++ch) {
        double drop_sum = 0.0;
        for (int rep = 0; rep < repeats; ++rep) {
            rng::Engine eng(rng::derive_seed(seed, "permute:" + input.channel_names[ch],
                                             static_cast<std::uint64_t>(rep)));
            // Fisher-Yates over window indices; the whole time profile of the
            // channel moves between windows.
            std::vector<std::size_t> perm(input.windows.size());
            for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
            for (std::size_t i = perm.size(); i > 1; --i)
                std::swap(perm[i - 1], perm[eng.uniform_index(i)]);

            auto shuffled = input.windows;
            for (std::size_t i = 0; i < shuffled.size(); ++i)
                shuffled[i][ch] = input.windows[perm[i]][ch];
            const auto pred = predict(shuffled);
            drop_sum += baseline - ordinal_iou(input.labels, pred);
        }
        result.push_back({input.channel_names[ch], drop_sum / repeats});
    }
    return result;
}

}  // namespace wildfire::metrics
