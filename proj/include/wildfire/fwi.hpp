#pragma once

#include <span>
#include <vector>

#include "wildfire/core.hpp"

namespace wildfire::fwi {

/// Moisture codes and drought indices carried day to day.
/// Startup values follow the standard convention: FFMC 85, DMC 6, DC 15,
/// and zero for the accumulation indices.
struct FwiState {
    double ffmc = 85.0;   // fine fuel moisture code, [0,101]
    double dmc = 6.0;     // duff moisture code, >= 0
    double dc = 15.0;     // drought code, >= 0
    double nesterov = 0.0;  // degC^2, >= 0
    double munger = 0.0;    // 0.5 * n^2 for n consecutive dry days
    double kbdi = 0.0;      // hundredths of an inch, [0,800]
    double angstroem = 0.0;
};

/// Behaviour indices derived from one day's codes, plus the windowed
/// precipitation features computed at series level.
struct FwiOutputs {
    double isi = 0.0;
    double bui = 0.0;
    double fwi = 0.0;
    double dsr = 0.0;
    double precip_index_3 = 0.0;
    double precip_index_5 = 0.0;
    double precip_index_9 = 0.0;
    double rain_sum_7d = 0.0;
    int days_since_rain = 0;
};

/// Angstroem index: RH/20 + (27 - T)/10, clamped below at 0.
double angstroem(double temperature_c, double relative_humidity);

/// Nesterov ignition index: accumulates T*(T - Tdew) on days with at most
/// 3 mm of rain, resets to 0 on wetter days.
double nesterov_step(double prev, double temperature_c, double dew_point_c, double rain_24h_mm);

/// Munger drought index: 0.5 * n^2 where n counts consecutive days with
/// rain below 1.27 mm; resets on wetter days. `prev` must itself be a valid
/// value of that form.
double munger_step(double prev, double rain_24h_mm);

/// Keetch-Byram drought index on the 0-800 (hundredths of an inch) scale.
/// Daily net rainfall is the amount above the 5.1 mm carryover threshold.
double kbdi_step(double prev, double temperature_max_c, double rain_24h_mm, double mean_annual_rain_mm);

struct FwiStepResult {
    FwiState state;
    FwiOutputs outputs;  // isi/bui/fwi/dsr only; precip fields stay 0
};

/// One daily step of the 1987 Canadian Fire Weather Index system
/// (FFMC, DMC, DC recurrences, then ISI, BUI, FWI, DSR). Also advances the
/// Nesterov, Munger and KBDI recurrences so one call per day updates the
/// whole FwiState. `month` selects the DMC/DC day-length factors.
FwiStepResult canadian_fwi_step(const FwiState& prev, double temperature_c, double relative_humidity,
                                double wind_speed_kmh, double rain_24h_mm, int month,
                                double dew_point_c = 0.0, double mean_annual_rain_mm = 800.0);

struct PrecipitationFeatures {
    std::vector<double> precip_index_3;
    std::vector<double> precip_index_5;
    std::vector<double> precip_index_9;
    std::vector<double> rain_sum_7d;
    std::vector<int> days_since_rain;
};

/// Windowed rain sums over the trailing 3/5/9/7 days (windows truncated at
/// the series start) and the count of days since strictly positive rain.
PrecipitationFeatures precipitation_features(std::span<const double> rain_mm);

/// Per-day index table for one zone's contiguous weather series.
struct IndexSeries {
    std::vector<FwiState> states;
    std::vector<FwiOutputs> outputs;
};

/// Runs every recurrence over a contiguous series of validated records,
/// starting from the standard startup state. Temperature input for the
/// daily indices is the 16h reading (afternoon convention).
IndexSeries compute_indices(std::span<const core::DailyZoneRecord> series,
                            double mean_annual_rain_mm = 800.0);

}  // namespace wildfire::fwi
