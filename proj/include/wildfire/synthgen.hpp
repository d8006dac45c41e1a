#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wildfire/core.hpp"

namespace wildfire::synthgen {

/// Qualitative calibration of one prediction zone: coastal/urban zones have
/// high urbanization and tourism pressure, forested mid-country zones low
/// ignition but high spread potential, the alpine zone long access times.
struct ZoneProfile {
    core::ZoneId zone;
    double urbanization = 0.5;        // [0,1]
    double forest_cover = 0.5;        // [0,1]
    double base_ignition_rate = 0.2;  // expected fires/day, >= 0
    double access_difficulty = 1.0;   // multiplier on intervention duration, >= 1
    double seasonal_amplitude = 6.0;  // degC
    double tourism_boost = 1.0;       // summer-weekend ignition factor, >= 1
};

struct WeatherNoise {
    double ar_coefficient = 0.8;   // lag-1 coefficient of the temperature anomaly
    double temp_sigma = 1.6;       // degC, innovation scale
    double rh_sigma = 5.0;         // % RH
    double wind_mean = 12.0;       // km/h
    double wind_sigma = 6.0;
    double wet_day_prob = 0.12;
    double rain_log_mu = 1.2;      // lognormal parameters of wet-day amounts
    double rain_log_sigma = 0.9;
    double base_temperature = 23.0;  // degC, summer baseline
};

struct GeneratorConfig {
    std::uint64_t seed = 42;
    int first_year = 2020;
    int last_year = 2023;
    int train_last_year = 0;  // 0 -> last_year - 2 (validation and test years follow)
    std::vector<ZoneProfile> profiles;
    WeatherNoise noise;
};

/// Seven-zone default calibration mirroring the coastal/forested/alpine
/// contrast of the study area.
std::vector<ZoneProfile> default_profiles();
GeneratorConfig default_config();

struct DailyWeather {
    core::Date date;
    double temperature_12h = 0.0;
    double temperature_16h = 0.0;
    double dew_point = 0.0;
    double relative_humidity = 0.0;
    double wind_speed = 0.0;
    double wind_direction = 0.0;
    double precipitation_24h = 0.0;
    double snow_height = 0.0;
};

/// Summer (June-September) weather for every year in the range.
/// Temperature is a seasonal sinusoid plus an AR(1) anomaly restarted each
/// summer; humidity is anti-correlated with the anomaly; precipitation is an
/// intermittent lognormal process.
std::vector<DailyWeather> generate_weather(const ZoneProfile& profile, int first_year, int last_year,
                                           std::uint64_t seed, const WeatherNoise& noise = {});

/// Smooth daily hazard score: exponentially weighted average of an
/// instantaneous dryness/heat/wind score, restarted at each summer gap.
/// Synthetic DFE classes and ignition intensity both derive from it.
std::vector<double> hazard_series(std::span<const DailyWeather> weather);

/// Poisson intensity for one day given the hazard level and calendar context.
double ignition_intensity(const ZoneProfile& profile, double hazard, bool summer_weekend);

struct DailyInterventions {
    int n_fires = 0;
    double total_intervention_minutes = 0.0;
    int engines_deployed = 0;
};

/// Fire counts from a hazard-driven Poisson process; per-fire durations from
/// a lognormal scaled by access difficulty; engines per fire floor at 1.
std::vector<DailyInterventions> generate_interventions(const ZoneProfile& profile,
                                                       std::span<const DailyWeather> weather,
                                                       std::uint64_t seed);

/// Hazard quantiles (20/45/70/90th over training-year days) used to map the
/// smooth hazard onto DFE classes 0-4.
struct HazardThresholds {
    double q20 = 0.0, q45 = 0.0, q70 = 0.0, q90 = 0.0;
    int classify(double hazard) const {
        if (hazard < q20) return 0;
        if (hazard < q45) return 1;
        if (hazard < q70) return 2;
        if (hazard < q90) return 3;
        return 4;
    }
};

/// Full synthetic dataset: one validated record per zone per summer day,
/// sorted by (zone, date). Bit-identical for identical configs.
std::vector<core::DailyZoneRecord> build_dataset(const GeneratorConfig& config);

}  // namespace wildfire::synthgen
