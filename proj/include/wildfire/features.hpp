#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "wildfire/core.hpp"
#include "wildfire/targets.hpp"

namespace wildfire::features {

struct AggregateResult {
    double mean = 0.0;
    double max = 0.0;
    double min = 0.0;
};

/// Mean/max/min over the per-source values of one zone-day.
AggregateResult aggregate_sources(std::span<const double> values);

/// Row-major feature table keyed by (zone, date).
struct FeatureMatrix {
    std::vector<core::ZoneId> row_zone;
    std::vector<core::Date> row_date;
    std::vector<std::string> columns;
    std::vector<double> values;  // row-major, rows x columns

    std::size_t n_rows() const { return row_zone.size(); }
    std::size_t n_cols() const { return columns.size(); }
    double at(std::size_t r, std::size_t c) const { return values[r * columns.size() + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * columns.size() + c]; }
    std::vector<double> column(std::size_t c) const;
    std::size_t column_index(const std::string& name) const;
    FeatureMatrix select_columns(const std::vector<std::string>& names) const;
    FeatureMatrix select_rows(std::span<const std::size_t> rows) const;
};

/// Assembles the full per-(zone, day) feature table for a validated dataset:
/// weather and fire-index channels through mean/max/min aggregation, calendar
/// flags, and previous-day observed class per target ("past risk").
FeatureMatrix assemble_features(std::span<const core::DailyZoneRecord> dataset,
                                const targets::LabelTable& labels,
                                double mean_annual_rain_mm = 800.0);

/// Names of columns whose sample variance is >= threshold, in original order.
/// Fit on training rows only.
std::vector<std::string> variance_filter(const FeatureMatrix& training, double threshold);

/// Correlation statistics between two columns.
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);
double kendall_tau(std::span<const double> x, std::span<const double> y);

/// Drops, for every pair whose |correlation| exceeds the threshold under any
/// of Pearson/Spearman/Kendall, the lower-variance column (ties keep the
/// earlier column). Scan order: variance descending. Returns kept names in
/// original column order. Fit on training rows, after the variance filter.
std::vector<std::string> correlation_filter(const FeatureMatrix& training, double threshold);

/// Column-wise standardization fitted on training rows only.
struct Standardization {
    std::vector<std::string> columns;
    std::vector<double> mean;
    std::vector<double> stddev;  // floored at a small epsilon
};

Standardization fit_standardization(const FeatureMatrix& training);
FeatureMatrix apply_standardization(const FeatureMatrix& m, const Standardization& s);

/// Model-ready window set: each window is C channels by T consecutive days in
/// one zone, labeled with the class at (last input day + horizon).
struct WindowTensor {
    std::size_t n_windows = 0;
    std::size_t n_channels = 0;
    std::size_t seq_len = 0;
    int horizon = 1;
    core::TargetKind target = core::TargetKind::DFE;
    std::vector<double> data;  // [window][channel][time]
    std::vector<int> labels;
    std::vector<core::ZoneId> window_zone;
    std::vector<core::Date> label_date;
    std::vector<std::string> channel_names;
    Standardization standardization;

    double at(std::size_t w, std::size_t c, std::size_t t) const {
        return data[(w * n_channels + c) * seq_len + t];
    }
};

struct WindowBuildSummary {
    std::size_t n_windows = 0;
    std::size_t n_runs = 0;
    std::size_t n_runs_too_short = 0;
};

/// Slides length-T windows over each contiguous zone-season run of the
/// (already standardized) matrix. Runs shorter than T + horizon contribute
/// zero windows and are counted in the summary.
WindowTensor make_windows(const FeatureMatrix& standardized, const targets::LabelTable& labels,
                          std::size_t seq_len, int horizon, core::TargetKind target,
                          WindowBuildSummary* summary = nullptr);

/// Undersampling decision for class-0 training windows.
struct SamplingPlan {
    double rate = 1.0;  // in [0.05, 1.0]
    std::uint64_t seed = 0;
    double selected_by = 0.0;  // validation IoU that picked this rate
};

/// Keeps ceil(rate * n0) class-0 windows by a seeded uniform draw and every
/// window with a positive label. Training windows only.
WindowTensor undersample(const WindowTensor& windows, double rate, std::uint64_t seed);

}  // namespace wildfire::features
