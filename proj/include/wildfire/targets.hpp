#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "wildfire/core.hpp"

namespace wildfire::targets {

/// Fitted 1-D binning of positive target values into four ordered classes.
/// Class 0 is reserved for zero-activity days and never appears here.
struct BinningModel {
    core::TargetKind target = core::TargetKind::NumFires;
    std::array<double, 4> centroids{};   // strictly increasing
    std::array<double, 3> boundaries{};  // midpoints between consecutive centroids
    int fitted_first_year = 0;
    int fitted_last_year = 0;
};

/// Lloyd's algorithm with k-means++ seeding and `restarts` restarts, backed by
/// an exact dynamic-programming solve so the returned clustering is globally
/// optimal; clusters relabeled by ascending centroid. Input values must be
/// strictly positive with at least four distinct values.
BinningModel fit_binning(std::span<const double> positive_values, core::TargetKind target,
                         std::uint64_t seed, int restarts = 50);

/// 0 for zero values, otherwise 1 + index of the nearest centroid with ties
/// resolved toward the lower class. Monotone non-decreasing in `value`.
core::RiskClass assign_class(double value, const BinningModel& model);

struct LabelKey {
    core::ZoneId zone;
    core::Date date;
    auto operator<=>(const LabelKey&) const = default;
};

struct LabelTable {
    std::map<LabelKey, std::array<core::RiskClass, 4>> labels;  // indexed by TargetKind order

    core::RiskClass at(const LabelKey& key, core::TargetKind target) const {
        return labels.at(key)[static_cast<std::size_t>(target)];
    }
};

/// DFE labels pass through unchanged; the three operational targets go
/// through their fitted binning.
LabelTable build_labels(std::span<const core::DailyZoneRecord> dataset,
                        const BinningModel& num_fires, const BinningModel& intervention_time,
                        const BinningModel& resources);

/// Positive values of one operational target over the given year range
/// (dataset rows outside the range are ignored).
std::vector<double> positive_target_values(std::span<const core::DailyZoneRecord> dataset,
                                           core::TargetKind target, int first_year, int last_year);

}  // namespace wildfire::targets
