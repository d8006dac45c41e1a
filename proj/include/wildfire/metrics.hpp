#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wildfire/core.hpp"

namespace wildfire::metrics {

/// Headline metric: soft Jaccard over ordinal class indices,
/// sum(min(y, yhat)) / sum(max(y, yhat)). Both-all-zero convention -> 1.0.
double ordinal_iou(std::span<const int> truth, std::span<const int> predicted);

struct PerClassJaccard {
    // Absent when a class appears in neither truth nor prediction.
    std::array<std::optional<double>, core::num_risk_classes> per_class;
    double macro_mean = 0.0;  // over present classes only
};

PerClassJaccard per_class_jaccard(std::span<const int> truth, std::span<const int> predicted);

using ConfusionMatrix = std::array<std::array<std::int64_t, core::num_risk_classes>,
                                   core::num_risk_classes>;  // [true][predicted]

ConfusionMatrix confusion_matrix(std::span<const int> truth, std::span<const int> predicted);

struct EvaluationReport {
    core::TargetKind target = core::TargetKind::DFE;
    std::string split;
    std::string model;
    double iou = 0.0;
    PerClassJaccard jaccard;
    ConfusionMatrix confusion{};
    std::size_t n_samples = 0;
};

EvaluationReport evaluate(core::TargetKind target, const std::string& split, const std::string& model,
                          std::span<const int> truth, std::span<const int> predicted);

/// Pearson correlation of class levels between the four targets. Entries
/// involving a constant vector are undefined (nullopt), not zero.
using TargetCorrelationMatrix = std::array<std::array<std::optional<double>, 4>, 4>;

TargetCorrelationMatrix target_correlation_matrix(const std::array<std::vector<int>, 4>& labels);

/// Predictor abstraction for permutation importance: given windows as
/// [window][channel][time] values, return a predicted class per window.
struct ImportanceInput {
    std::vector<std::vector<std::vector<double>>> windows;  // B x C x T
    std::vector<int> labels;
    std::vector<std::string> channel_names;
};

struct FeatureImportance {
    std::string feature;
    double importance = 0.0;  // baseline IoU minus mean permuted IoU
};

/// Permutes one channel across windows (time profile moves as a block),
/// `repeats` times with per-repeat sub-seeds, and reports the IoU drop.
std::vector<FeatureImportance> permutation_importance(
    const std::function<std::vector<int>(const std::vector<std::vector<std::vector<double>>>&)>& predict,
    const ImportanceInput& input, std::uint64_t seed, int repeats = 3);

}  // namespace wildfire::metrics
