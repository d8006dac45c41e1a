#include "wildfire/fwi.hpp"

#include <algorithm>
#include <cmath>

namespace wildfire::fwi {

namespace {

// Day-length factors for DMC (Le) and DC (Lf), northern mid-latitudes.
constexpr double dmc_day_length[12] = {6.5, 7.5, 9.0, 12.8, 13.9, 13.9,
                                       12.4, 10.9, 9.4, 8.0, 7.0, 6.0};
constexpr double dc_day_length[12] = {-1.6, -1.6, -1.6, 0.9, 3.8, 5.8,
                                      6.4, 5.0, 2.4, 0.4, -1.6, -1.6};

constexpr double kNesterovResetRainMm = 3.0;
constexpr double kMungerResetRainMm = 1.27;
constexpr double kKbdiCarryoverMm = 5.1;
constexpr double kMmPerHundredthInch = 0.254;

double ffmc_step(double prev_ffmc, double t, double rh, double wind, double rain) {
    double mo = 147.2 * (101.0 - prev_ffmc) / (59.5 + prev_ffmc);
    if (rain > 0.5) {
        const double rf = rain - 0.5;
        double mr = mo + 42.5 * rf * std::exp(-100.0 / (251.0 - mo)) * (1.0 - std::exp(-6.93 / rf));
        if (mo > 150.0) mr += 0.0015 * (mo - 150.0) * (mo - 150.0) * std::sqrt(rf);
        mo = std::min(mr, 250.0);
    }
    const double ed = 0.942 * std::pow(rh, 0.679) + 11.0 * std::exp((rh - 100.0) / 10.0) +
                      0.18 * (21.1 - t) * (1.0 - std::exp(-0.115 * rh));
    double m;
    if (mo > ed) {
        const double ko = 0.424 * (1.0 - std::pow(rh / 100.0, 1.7)) +
                          0.0694 * std::sqrt(wind) * (1.0 - std::pow(rh / 100.0, 8.0));
        const double kd = ko * 0.581 * std::exp(0.0365 * t);
        m = ed + (mo - ed) * std::pow(10.0, -kd);
    } else {
        const double ew = 0.618 * std::pow(rh, 0.753) + 10.0 * std::exp((rh - 100.0) / 10.0) +
                          0.18 * (21.1 - t) * (1.0 - std::exp(-0.115 * rh));
        if (mo < ew) {
            const double kl = 0.424 * (1.0 - std::pow((100.0 - rh) / 100.0, 1.7)) +
                              0.0694 * std::sqrt(wind) * (1.0 - std::pow((100.0 - rh) / 100.0, 8.0));
            const double kw = kl * 0.581 * std::exp(0.0365 * t);
            m = ew - (ew - mo) * std::pow(10.0, -kw);
        } else {
            m = mo;
        }
    }
    return std::clamp(59.5 * (250.0 - m) / (147.2 + m), 0.0, 101.0);
}

double dmc_step(double prev_dmc, double t, double rh, double rain, int month) {
    double po = prev_dmc;
    if (rain > 1.5) {
        const double re = 0.92 * rain - 1.27;
        const double mo = 20.0 + 280.0 / std::exp(0.023 * po);
        double b;
        if (po <= 33.0)
            b = 100.0 / (0.5 + 0.3 * po);
        else if (po <= 65.0)
            b = 14.0 - 1.3 * std::log(po);
        else
            b = 6.2 * std::log(po) - 17.2;
        const double mr = mo + 1000.0 * re / (48.77 + b * re);
        po = std::max(0.0, 43.43 * (5.6348 - std::log(mr - 20.0)));
    }
    const double tc = std::max(t, -1.1);
    const double k = 1.894 * (tc + 1.1) * (100.0 - rh) * dmc_day_length[month - 1] * 1e-6;
    return po + 100.0 * k;
}

double dc_step(double prev_dc, double t, double rain, int month) {
    double dr = prev_dc;
    if (rain > 2.8) {
        const double rd = 0.83 * rain - 1.27;
        const double qo = 800.0 * std::exp(-prev_dc / 400.0);
        const double qr = qo + 3.937 * rd;
        dr = std::max(0.0, 400.0 * std::log(800.0 / qr));
    }
    const double tc = std::max(t, -2.8);
    const double v = std::max(0.0, 0.36 * (tc + 2.8) + dc_day_length[month - 1]);
    return dr + 0.5 * v;
}

double isi_from(double ffmc, double wind) {
    const double m = 147.2 * (101.0 - ffmc) / (59.5 + ffmc);
    const double fw = std::exp(0.05039 * wind);
    const double ff = 91.9 * std::exp(-0.1386 * m) * (1.0 + std::pow(m, 5.31) / 4.93e7);
    return 0.208 * fw * ff;
}

double bui_from(double dmc, double dc) {
    if (dmc <= 0.0 && dc <= 0.0) return 0.0;
    double u;
    if (dmc <= 0.4 * dc) {
        u = 0.8 * dmc * dc / (dmc + 0.4 * dc);
    } else {
        u = dmc - (1.0 - 0.8 * dc / (dmc + 0.4 * dc)) *
                      (0.92 + std::pow(0.0114 * dmc, 1.7));
    }
    return std::max(0.0, u);
}

double fwi_from(double isi, double bui) {
    double fd;
    if (bui <= 80.0)
        fd = 0.626 * std::pow(bui, 0.809) + 2.0;
    else
        fd = 1000.0 / (25.0 + 108.64 * std::exp(-0.023 * bui));
    const double b = 0.1 * isi * fd;
    if (b > 1.0) return std::exp(2.72 * std::pow(0.434 * std::log(b), 0.647));
    return b;
}

}  // namespace

double angstroem(double temperature_c, double relative_humidity) {
    if (relative_humidity < 0.0 || relative_humidity > 100.0)
        throw core::ValidationError("relative_humidity", "relative humidity outside [0,100]");
    return std::max(0.0, relative_humidity / 20.0 + (27.0 - temperature_c) / 10.0);
}

double nesterov_step(double prev, double temperature_c, double dew_point_c, double rain_24h_mm) {
    if (rain_24h_mm > kNesterovResetRainMm) return 0.0;
    return std::max(0.0, prev + temperature_c * (temperature_c - dew_point_c));
}

double munger_step(double prev, double rain_24h_mm) {
    if (prev < 0.0) throw core::ValidationError("munger", "negative Munger index");
    const double n = std::sqrt(2.0 * prev);
    if (std::abs(n - std::round(n)) > 1e-9)
        throw core::ValidationError("munger", "Munger index is not of the form 0.5*n^2");
    if (rain_24h_mm >= kMungerResetRainMm) return 0.0;
    const double next = std::round(n) + 1.0;
    return 0.5 * next * next;
}

double kbdi_step(double prev, double temperature_max_c, double rain_24h_mm,
                 double mean_annual_rain_mm) {
    if (prev < 0.0 || prev > 800.0) throw core::ValidationError("kbdi", "KBDI outside [0,800]");
    const double net_rain_mm = std::max(0.0, rain_24h_mm - kKbdiCarryoverMm);
    double q = std::max(0.0, prev - net_rain_mm / kMmPerHundredthInch);
    const double t_f = temperature_max_c * 9.0 / 5.0 + 32.0;
    const double annual_in = mean_annual_rain_mm / 25.4;
    const double drought_factor =
        (800.0 - q) * (0.968 * std::exp(0.0486 * t_f) - 8.30) * 1e-3 /
        (1.0 + 10.88 * std::exp(-0.0441 * annual_in));
    q += std::max(0.0, drought_factor);
    return std::clamp(q, 0.0, 800.0);
}

namespace {

FwiStepResult fwi_step_impl(const FwiState& prev, double t, double rh, double wind, double rain,
                            int month, double dew_point, double mean_annual_rain_mm) {
    FwiStepResult r;
    r.state.ffmc = ffmc_step(prev.ffmc, t, rh, wind, rain);
    r.state.dmc = dmc_step(prev.dmc, t, rh, rain, month);
    r.state.dc = dc_step(prev.dc, t, rain, month);
    r.state.nesterov = nesterov_step(prev.nesterov, t, dew_point, rain);
    r.state.munger = munger_step(prev.munger, rain);
    r.state.kbdi = kbdi_step(prev.kbdi, t, rain, mean_annual_rain_mm);
    r.state.angstroem = angstroem(t, rh);
    r.outputs.isi = isi_from(r.state.ffmc, wind);
    r.outputs.bui = bui_from(r.state.dmc, r.state.dc);
    r.outputs.fwi = fwi_from(r.outputs.isi, r.outputs.bui);
    r.outputs.dsr = 0.0272 * std::pow(r.outputs.fwi, 1.77);
    return r;
}

}  // namespace

FwiStepResult canadian_fwi_step(const FwiState& prev, double temperature_c, double relative_humidity,
                                double wind_speed_kmh, double rain_24h_mm, int month,
                                double dew_point_c, double mean_annual_rain_mm) {
    if (relative_humidity < 0.0 || relative_humidity > 100.0)
        throw core::ValidationError("relative_humidity", "relative humidity outside [0,100]");
    if (wind_speed_kmh < 0.0) throw core::ValidationError("wind_speed", "negative wind speed");
    if (rain_24h_mm < 0.0) throw core::ValidationError("precipitation_24h", "negative precipitation");
    if (month < 1 || month > 12) throw core::ValidationError("month", "month outside [1,12]");
    return fwi_step_impl(prev, temperature_c, relative_humidity, wind_speed_kmh, rain_24h_mm, month,
                         dew_point_c, mean_annual_rain_mm);
}

PrecipitationFeatures precipitation_features(std::span<const double> rain_mm) {
    const std::size_t n = rain_mm.size();
    PrecipitationFeatures f;
    f.precip_index_3.resize(n);
    f.precip_index_5.resize(n);
    f.precip_index_9.resize(n);
    f.rain_sum_7d.resize(n);
    f.days_since_rain.resize(n);
    auto window_sum = [&](std::size_t i, std::size_t w) {
        double s = 0.0;
        const std::size_t start = i + 1 >= w ? i + 1 - w : 0;
        for (std::size_t j = start; j <= i; ++j) {
            if (rain_mm[j] < 0.0)
                throw core::ValidationError("precipitation_24h", "negative precipitation");
            s += rain_mm[j];
        }
        return s;
    };
    for (std::size_t i = 0; i < n; ++i) {
        f.precip_index_3[i] = window_sum(i, 3);
        f.precip_index_5[i] = window_sum(i, 5);
        f.precip_index_9[i] = window_sum(i, 9);
        f.rain_sum_7d[i] = window_sum(i, 7);
        if (rain_mm[i] > 0.0)
            f.days_since_rain[i] = 0;
        else
            f.days_since_rain[i] = i == 0 ? 0 : f.days_since_rain[i - 1] + 1;
    }
    return f;
}

IndexSeries compute_indices(std::span<const core::DailyZoneRecord> series,
                            double mean_annual_rain_mm) {
    IndexSeries out;
    out.states.reserve(series.size());
    out.outputs.reserve(series.size());
    std::vector<double> rain;
    rain.reserve(series.size());
    FwiState state;
    for (const auto& rec : series) {
        auto step = canadian_fwi_step(state, rec.temperature_16h, rec.relative_humidity,
                                      rec.wind_speed, rec.precipitation_24h, rec.date.month,
                                      rec.dew_point, mean_annual_rain_mm);
        state = step.state;
        out.states.push_back(step.state);
        out.outputs.push_back(step.outputs);
        rain.push_back(rec.precipitation_24h);
    }
    const auto pf = precipitation_features(rain);
    for (std::size_t i = 0; i < out.outputs.size(); ++i) {
        out.outputs[i].precip_index_3 = pf.precip_index_3[i];
        out.outputs[i].precip_index_5 = pf.precip_index_5[i];
        out.outputs[i].precip_index_9 = pf.precip_index_9[i];
        out.outputs[i].rain_sum_7d = pf.rain_sum_7d[i];
        out.outputs[i].days_since_rain = pf.days_since_rain[i];
    }
    return out;
}

}  // namespace wildfire::fwi
