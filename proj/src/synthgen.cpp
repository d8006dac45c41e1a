#include "wildfire/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "wildfire/rng.hpp"

namespace wildfire::synthgen {

namespace {

constexpr int kSummerFirstMonth = 6;
constexpr int kSummerLastMonth = 9;
constexpr double kHazardSmoothing = 0.55;  // EWMA carry-over of the hazard score

int day_of_year(const core::Date& d) {
    return static_cast<int>(core::to_civil_days(d) - core::to_civil_days(core::Date{d.year, 1, 1})) + 1;
}

}  // namespace

std::vector<ZoneProfile> default_profiles() {
    // 61/65/66 coastal-urban, 62/64/67 forested mid-country, 63 alpine.
    return {
        {core::ZoneId{61}, 0.85, 0.20, 0.50, 1.0, 6.0, 1.8},
        {core::ZoneId{62}, 0.15, 0.80, 0.10, 1.6, 7.0, 1.2},
        {core::ZoneId{63}, 0.05, 0.70, 0.06, 2.6, 8.5, 1.1},
        {core::ZoneId{64}, 0.20, 0.75, 0.12, 1.5, 7.0, 1.2},
        {core::ZoneId{65}, 0.90, 0.15, 0.55, 1.0, 6.0, 2.0},
        {core::ZoneId{66}, 0.75, 0.30, 0.35, 1.1, 6.5, 1.6},
        {core::ZoneId{67}, 0.10, 0.85, 0.08, 1.8, 7.5, 1.1},
    };
}

GeneratorConfig default_config() {
    GeneratorConfig c;
    c.profiles = default_profiles();
    return c;
}

std::vector<DailyWeather> generate_weather(const ZoneProfile& profile, int first_year, int last_year,
                                           std::uint64_t seed, const WeatherNoise& noise) {
    if (first_year > last_year)
        throw core::ValidationError("years", "empty year range");
    rng::Engine eng(rng::derive_seed(seed, "weather", static_cast<std::uint64_t>(profile.zone.code)));
    std::vector<DailyWeather> out;
    for (int year = first_year; year <= last_year; ++year) {
        double anomaly = 0.0;  // AR(1) restarts at each summer gap
        core::Date d{year, kSummerFirstMonth, 1};
        while (d.month <= kSummerLastMonth) {
            DailyWeather w;
            w.date = d;
            // Seasonal mean peaks around late July (day 205).
            const double phase = 2.0 * 3.14159265358979323846 * (day_of_year(d) - 205) / 365.25;
            const double seasonal = noise.base_temperature + profile.seasonal_amplitude * std::cos(phase);
            anomaly = noise.ar_coefficient * anomaly + noise.temp_sigma * eng.normal();
            w.temperature_16h = seasonal + anomaly;
            w.temperature_12h = w.temperature_16h - 2.5 + 0.3 * eng.normal();
            // Humidity anti-correlated with the temperature anomaly.
            double rh = 62.0 - 3.5 * anomaly + noise.rh_sigma * eng.normal();
            const bool wet = eng.bernoulli(noise.wet_day_prob + 0.08 * std::max(0.0, (rh - 62.0) / 30.0));
            if (wet) {
                w.precipitation_24h = eng.lognormal(noise.rain_log_mu, noise.rain_log_sigma);
                rh += 12.0;
            }
            w.relative_humidity = std::clamp(rh, 3.0, 100.0);
            w.dew_point = w.temperature_16h - (100.0 - w.relative_humidity) / 5.0;
            w.wind_speed = std::max(0.0, eng.normal(noise.wind_mean, noise.wind_sigma));
            w.wind_direction = eng.uniform(0.0, 360.0);
            // Residual spring snow in high-altitude zones, early June only.
            if (profile.access_difficulty >= 2.0 && d.month == 6 && d.day <= 10)
                w.snow_height = std::max(0.0, eng.normal(2.0, 1.5));
            out.push_back(w);
            d = core::next_day(d);
        }
    }
    return out;
}

std::vector<double> hazard_series(std::span<const DailyWeather> weather) {
    std::vector<double> hazard(weather.size());
    double smoothed = 0.6;
    int dry_streak = 0;
    for (std::size_t i = 0; i < weather.size(); ++i) {
        const auto& w = weather[i];
        if (i > 0 && core::to_civil_days(w.date) != core::to_civil_days(weather[i - 1].date) + 1) {
            smoothed = 0.6;  // summer gap: restart
            dry_streak = 0;
        }
        dry_streak = w.precipitation_24h > 1.0 ? 0 : dry_streak + 1;
        const double instantaneous = 0.45 * (w.temperature_16h - 18.0) / 10.0 +
                                     0.35 * (70.0 - w.relative_humidity) / 50.0 +
                                     0.15 * w.wind_speed / 25.0 +
                                     0.25 * std::min(dry_streak, 14) / 14.0;
        smoothed = kHazardSmoothing * smoothed + (1.0 - kHazardSmoothing) * instantaneous;
        hazard[i] = smoothed;
    }
    return hazard;
}

double ignition_intensity(const ZoneProfile& profile, double hazard, bool summer_weekend) {
    double log_rate = 1.1 * (hazard - 0.6) + 0.5 * profile.urbanization;
    if (summer_weekend) log_rate += std::log(profile.tourism_boost);
    return profile.base_ignition_rate * std::exp(log_rate);
}

std::vector<DailyInterventions> generate_interventions(const ZoneProfile& profile,
                                                       std::span<const DailyWeather> weather,
                                                       std::uint64_t seed) {
    rng::Engine eng(
        rng::derive_seed(seed, "interventions", static_cast<std::uint64_t>(profile.zone.code)));
    const auto hazard = hazard_series(weather);
    std::vector<DailyInterventions> out(weather.size());
    for (std::size_t i = 0; i < weather.size(); ++i) {
        const auto cal = core::make_calendar_features(weather[i].date);
        const bool weekend = cal.is_weekend || cal.is_holiday;
        const double lambda = ignition_intensity(profile, hazard[i], weekend);
        const int fires = eng.poisson(lambda);
        DailyInterventions day;
        day.n_fires = fires;
        for (int f = 0; f < fires; ++f) {
            // Lognormal per-fire duration, median ~45 min, scaled by terrain.
            day.total_intervention_minutes += profile.access_difficulty * eng.lognormal(3.8, 0.8);
            day.engines_deployed += 1 + eng.poisson(1.2 + hazard[i]);
        }
        out[i] = day;
    }
    return out;
}

std::vector<core::DailyZoneRecord> build_dataset(const GeneratorConfig& config) {
    if (config.first_year > config.last_year)
        throw core::ValidationError("years", "empty year range");
    if (config.profiles.empty())
        throw core::ValidationError("profiles", "no zone profiles configured");
    for (std::size_t i = 0; i < config.profiles.size(); ++i)
        for (std::size_t j = i + 1; j < config.profiles.size(); ++j)
            if (config.profiles[i].zone == config.profiles[j].zone)
                throw core::ValidationError("profiles", "duplicate zone profile");
    const int train_last = config.train_last_year != 0 ? config.train_last_year : config.last_year - 2;

    struct ZoneData {
        std::vector<DailyWeather> weather;
        std::vector<double> hazard;
        std::vector<DailyInterventions> interventions;
    };
    std::vector<ZoneData> zones(config.profiles.size());
    std::vector<double> training_hazard;
    for (std::size_t z = 0; z < config.profiles.size(); ++z) {
        auto& zd = zones[z];
        zd.weather = generate_weather(config.profiles[z], config.first_year, config.last_year,
                                      config.seed, config.noise);
        zd.hazard = hazard_series(zd.weather);
        zd.interventions = generate_interventions(config.profiles[z], zd.weather, config.seed);
        for (std::size_t i = 0; i < zd.weather.size(); ++i)
            if (zd.weather[i].date.year <= train_last) training_hazard.push_back(zd.hazard[i]);
    }
    if (training_hazard.empty())
        throw core::ValidationError("years", "no training years in range");
    std::sort(training_hazard.begin(), training_hazard.end());
    auto quantile = [&](double q) {
        const double pos = q * (training_hazard.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, training_hazard.size() - 1);
        const double frac = pos - lo;
        return training_hazard[lo] * (1.0 - frac) + training_hazard[hi] * frac;
    };
    const HazardThresholds thresholds{quantile(0.20), quantile(0.45), quantile(0.70), quantile(0.90)};

    std::vector<core::DailyZoneRecord> records;
    for (std::size_t z = 0; z < config.profiles.size(); ++z) {
        const auto& zd = zones[z];
        for (std::size_t i = 0; i < zd.weather.size(); ++i) {
            const auto& w = zd.weather[i];
            core::DailyZoneRecord rec;
            rec.zone = config.profiles[z].zone;
            rec.date = w.date;
            rec.temperature_12h = w.temperature_12h;
            rec.temperature_16h = w.temperature_16h;
            rec.dew_point = w.dew_point;
            rec.relative_humidity = w.relative_humidity;
            rec.wind_speed = w.wind_speed;
            rec.wind_direction = w.wind_direction;
            rec.precipitation_24h = w.precipitation_24h;
            rec.snow_height = w.snow_height;
            // The danger rating for day d is issued ahead of time from data
            // through d-1, like its operational counterpart; the first day of
            // each summer falls back to its own hazard.
            const bool has_prev =
                i > 0 && core::to_civil_days(w.date) == core::to_civil_days(zd.weather[i - 1].date) + 1;
            rec.observed_dfe =
                core::RiskClass(thresholds.classify(zd.hazard[has_prev ? i - 1 : i]));
            rec.n_fires = zd.interventions[i].n_fires;
            rec.total_intervention_minutes = zd.interventions[i].total_intervention_minutes;
            rec.engines_deployed = zd.interventions[i].engines_deployed;
            records.push_back(core::validate_record(rec));
        }
    }
    return records;
}

}  // namespace wildfire::synthgen
