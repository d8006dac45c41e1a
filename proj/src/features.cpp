#include "wildfire/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "wildfire/fwi.hpp"
#include "wildfire/rng.hpp"

namespace wildfire::features {

AggregateResult aggregate_sources(std::span<const double> values) {
    if (values.empty()) throw core::ValidationError("values", "no source values to aggregate");
    AggregateResult r{0.0, values[0], values[0]};
    for (double v : values) {
        r.mean += v;
        r.max = std::max(r.max, v);
        r.min = std::min(r.min, v);
    }
    r.mean /= static_cast<double>(values.size());
    return r;
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
    std::vector<double> out(n_rows());
    for (std::size_t r = 0; r < n_rows(); ++r) out[r] = at(r, c);
    return out;
}

std::size_t FeatureMatrix::column_index(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c)
        if (columns[c] == name) return c;
    throw core::ValidationError("column", "unknown column: " + name);
}

FeatureMatrix FeatureMatrix::select_columns(const std::vector<std::string>& names) const {
    FeatureMatrix out;
    out.row_zone = row_zone;
    out.row_date = row_date;
    out.columns = names;
    std::vector<std::size_t> idx;
    idx.reserve(names.size());
    for (const auto& n : names) idx.push_back(column_index(n));
    out.values.resize(n_rows() * names.size());
    for (std::size_t r = 0; r < n_rows(); ++r)
        for (std::size_t c = 0; c < idx.size(); ++c) out.at(r, c) = at(r, idx[c]);
    return out;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> rows) const {
    FeatureMatrix out;
    out.columns = columns;
    out.row_zone.reserve(rows.size());
    out.row_date.reserve(rows.size());
    out.values.reserve(rows.size() * columns.size());
    for (std::size_t r : rows) {
        out.row_zone.push_back(row_zone[r]);
        out.row_date.push_back(row_date[r]);
        for (std::size_t c = 0; c < columns.size(); ++c) out.values.push_back(at(r, c));
    }
    return out;
}

namespace {

// Contiguous (zone, date) runs of an assumed (zone, date)-sorted index list.
std::vector<std::pair<std::size_t, std::size_t>> contiguous_runs(
    std::span<const core::ZoneId> zones, std::span<const core::Date> dates) {
    std::vector<std::pair<std::size_t, std::size_t>> runs;
    std::size_t start = 0;
    for (std::size_t i = 1; i <= zones.size(); ++i) {
        const bool split =
            i == zones.size() || zones[i] != zones[start] ||
            core::to_civil_days(dates[i]) != core::to_civil_days(dates[i - 1]) + 1;
        if (split) {
            runs.emplace_back(start, i);
            start = i;
        }
    }
    return runs;
}

}  // namespace

FeatureMatrix assemble_features(std::span<const core::DailyZoneRecord> dataset,
                                const targets::LabelTable& labels, double mean_annual_rain_mm) {
    if (dataset.empty()) throw core::ValidationError("dataset", "empty dataset");

    // Aggregated channels built from the per-day weather and index values.
    static const std::vector<std::string> base_names = {
        "temp12", "temp16", "dewpoint", "rh", "wind_speed", "wind_dir", "precip24", "snow",
        "ffmc", "dmc", "dc", "isi", "bui", "fwi", "dsr", "nesterov", "munger", "kbdi",
        "angstroem", "precip_idx3", "precip_idx5", "precip_idx9", "rain_sum_7d", "days_since_rain"};

    FeatureMatrix m;
    for (const auto& b : base_names) {
        m.columns.push_back(b + "_mean");
        m.columns.push_back(b + "_max");
        m.columns.push_back(b + "_min");
    }
    m.columns.insert(m.columns.end(),
                     {"day_of_week", "iso_week", "is_weekend", "is_holiday", "past_risk_dfe",
                      "past_risk_num_fires", "past_risk_intervention_time", "past_risk_resources"});

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (dataset[a].zone != dataset[b].zone) return dataset[a].zone < dataset[b].zone;
        return dataset[a].date < dataset[b].date;
    });

    std::vector<core::ZoneId> zones(dataset.size());
    std::vector<core::Date> dates(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        zones[i] = dataset[order[i]].zone;
        dates[i] = dataset[order[i]].date;
    }
    m.row_zone = zones;
    m.row_date = dates;
    m.values.assign(dataset.size() * m.columns.size(), 0.0);

    // Index recurrences restart at every zone-season boundary.
    for (const auto& [begin, end] : contiguous_runs(zones, dates)) {
        std::vector<core::DailyZoneRecord> run;
        run.reserve(end - begin);
        for (std::size_t i = begin; i < end; ++i) run.push_back(dataset[order[i]]);
        const auto indices = fwi::compute_indices(run, mean_annual_rain_mm);

        for (std::size_t i = begin; i < end; ++i) {
            const auto& rec = run[i - begin];
            const auto& st = indices.states[i - begin];
            const auto& out = indices.outputs[i - begin];
            const double day_values[] = {
                rec.temperature_12h, rec.temperature_16h, rec.dew_point, rec.relative_humidity,
                rec.wind_speed, rec.wind_direction, rec.precipitation_24h, rec.snow_height,
                st.ffmc, st.dmc, st.dc, out.isi, out.bui, out.fwi, out.dsr, st.nesterov,
                st.munger, st.kbdi, st.angstroem, out.precip_index_3, out.precip_index_5,
                out.precip_index_9, out.rain_sum_7d, static_cast<double>(out.days_since_rain)};
            std::size_t col = 0;
            for (double v : day_values) {
                // One synthetic source per zone: mean == max == min.
                const auto agg = aggregate_sources(std::span<const double>(&v, 1));
                m.at(i, col++) = agg.mean;
                m.at(i, col++) = agg.max;
                m.at(i, col++) = agg.min;
            }
            const auto cal = core::make_calendar_features(rec.date);
            m.at(i, col++) = cal.day_of_week;
            m.at(i, col++) = cal.iso_week;
            m.at(i, col++) = cal.is_weekend ? 1.0 : 0.0;
            m.at(i, col++) = cal.is_holiday ? 1.0 : 0.0;
            if (i > begin) {
                const auto& prev = labels.labels.at(targets::LabelKey{rec.zone, run[i - begin - 1].date});
                for (int t = 0; t < 4; ++t) m.at(i, col + t) = prev[t].level;
            }  // first day of a run keeps the zero fallback
        }
    }
    return m;
}

namespace {

double column_variance(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    return x.size() > 1 ? var / (n - 1.0) : 0.0;
}

std::vector<double> average_ranks(std::span<const double> x) {
    std::vector<std::size_t> order(x.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(x.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
        const double rank = 0.5 * (i + j) + 1.0;  // average rank, 1-based
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
        i = j + 1;
    }
    return ranks;
}

// Merge-sort swap counting for Knight's Kendall algorithm.
std::uint64_t count_inversions(std::vector<double>& y) {
    std::vector<double> buffer(y.size());
    std::uint64_t swaps = 0;
    for (std::size_t width = 1; width < y.size(); width *= 2) {
        for (std::size_t lo = 0; lo + width < y.size(); lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, y.size());
            std::size_t a = lo, b = mid, out = lo;
            while (a < mid && b < hi) {
                if (y[b] < y[a]) {
                    swaps += mid - a;
                    buffer[out++] = y[b++];
                } else {
                    buffer[out++] = y[a++];
                }
            }
            while (a < mid) buffer[out++] = y[a++];
            while (b < hi) buffer[out++] = y[b++];
            std::copy(buffer.begin() + lo, buffer.begin() + hi, y.begin() + lo);
        }
    }
    return swaps;
}

std::uint64_t tie_pairs(std::span<const double> sorted) {
    std::uint64_t pairs = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        const std::uint64_t t = j - i + 1;
        pairs += t * (t - 1) / 2;
        i = j + 1;
    }
    return pairs;
}

}  // namespace

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty())
        throw core::ValidationError("columns", "mismatched or empty columns");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        cov += (x[i] - mx) * (y[i] - my);
        vx += (x[i] - mx) * (x[i] - mx);
        vy += (y[i] - my) * (y[i] - my);
    }
    if (vx <= 0.0 || vy <= 0.0) return 0.0;
    return cov / std::sqrt(vx * vy);
}

double spearman(std::span<const double> x, std::span<const double> y) {
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

// Kendall tau-b with tie correction, O(n log n) via merge-sort inversion
// counting.
double kendall_tau(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw core::ValidationError("columns", "mismatched or too-short columns");
    const std::size_t n = x.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (x[a] != x[b]) return x[a] < x[b];
        return y[a] < y[b];
    });

    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = x[order[i]];
        ys[i] = y[order[i]];
    }

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::uint64_t n1 = tie_pairs(xs);
    std::vector<double> ys_sorted = ys;
    std::sort(ys_sorted.begin(), ys_sorted.end());
    const std::uint64_t n2 = tie_pairs(ys_sorted);

    // Pairs tied in both x and y.
    std::uint64_t n3 = 0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[j + 1] == xs[i] && ys[j + 1] == ys[i]) ++j;
        const std::uint64_t t = j - i + 1;
        n3 += t * (t - 1) / 2;
        i = j + 1;
    }

    std::vector<double> merge_y = ys;
    const std::uint64_t discordant = count_inversions(merge_y);
    const double s = static_cast<double>(n0) - static_cast<double>(n1) - static_cast<double>(n2) +
                     static_cast<double>(n3) - 2.0 * static_cast<double>(discordant);
    const double denom = std::sqrt(static_cast<double>(n0 - n1)) * std::sqrt(static_cast<double>(n0 - n2));
    if (denom <= 0.0) return 0.0;
    return s / denom;
}

std::vector<std::string> variance_filter(const FeatureMatrix& training, double threshold) {
    std::vector<std::string> kept;
    for (std::size_t c = 0; c < training.n_cols(); ++c) {
        const auto col = training.column(c);
        if (column_variance(col) >= threshold) kept.push_back(training.columns[c]);
    }
    return kept;
}

std::vector<std::string> correlation_filter(const FeatureMatrix& training, double threshold) {
    const std::size_t n_cols = training.n_cols();
    std::vector<std::vector<double>> cols(n_cols);
    std::vector<double> variances(n_cols);
    for (std::size_t c = 0; c < n_cols; ++c) {
        cols[c] = training.column(c);
        variances[c] = column_variance(cols[c]);
    }

    // Scan order: variance descending, original index breaking ties so exact
    // duplicates keep the first column.
    std::vector<std::size_t> order(n_cols);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (variances[a] != variances[b]) return variances[a] > variances[b];
        return a < b;
    });

    std::vector<bool> dropped(n_cols, false);
    for (std::size_t i = 0; i < n_cols; ++i) {
        const std::size_t a = order[i];
        if (dropped[a]) continue;
        for (std::size_t j = i + 1; j < n_cols; ++j) {
            const std::size_t b = order[j];
            if (dropped[b]) continue;
            const double p = std::abs(pearson(cols[a], cols[b]));
            if (p > threshold) {
                dropped[b] = true;
                continue;
            }
            if (std::abs(spearman(cols[a], cols[b])) > threshold ||
                std::abs(kendall_tau(cols[a], cols[b])) > threshold)
                dropped[b] = true;
        }
    }
    std::vector<std::string> kept;
    for (std::size_t c = 0; c < n_cols; ++c)
        if (!dropped[c]) kept.push_back(training.columns[c]);
    return kept;
}

Standardization fit_standardization(const FeatureMatrix& training) {
    Standardization s;
    s.columns = training.columns;
    s.mean.resize(training.n_cols());
    s.stddev.resize(training.n_cols());
    for (std::size_t c = 0; c < training.n_cols(); ++c) {
        const auto col = training.column(c);
        double mean = 0.0;
        for (double v : col) mean += v;
        mean /= static_cast<double>(col.size());
        double var = 0.0;
        for (double v : col) var += (v - mean) * (v - mean);
        var /= static_cast<double>(col.size());
        s.mean[c] = mean;
        s.stddev[c] = std::max(std::sqrt(var), 1e-12);
    }
    return s;
}

FeatureMatrix apply_standardization(const FeatureMatrix& m, const Standardization& s) {
    if (m.columns != s.columns)
        throw core::ValidationError("columns", "standardization fitted on different columns");
    FeatureMatrix out = m;
    for (std::size_t r = 0; r < m.n_rows(); ++r)
        for (std::size_t c = 0; c < m.n_cols(); ++c)
            out.at(r, c) = (m.at(r, c) - s.mean[c]) / s.stddev[c];
    return out;
}

WindowTensor make_windows(const FeatureMatrix& standardized, const targets::LabelTable& labels,
                          std::size_t seq_len, int horizon, core::TargetKind target,
                          WindowBuildSummary* summary) {
    if (seq_len < 1) throw core::ValidationError("seq_len", "sequence length must be >= 1");
    if (horizon < 1) throw core::ValidationError("horizon", "horizon must be >= 1");

    WindowTensor t;
    t.n_channels = standardized.n_cols();
    t.seq_len = seq_len;
    t.horizon = horizon;
    t.target = target;
    t.channel_names = standardized.columns;

    WindowBuildSummary local{};
    const auto runs = contiguous_runs(standardized.row_zone, standardized.row_date);
    for (const auto& [begin, end] : runs) {
        ++local.n_runs;
        const std::size_t len = end - begin;
        if (len < seq_len + static_cast<std::size_t>(horizon)) {
            ++local.n_runs_too_short;
            continue;
        }
        for (std::size_t start = begin; start + seq_len + horizon <= end; ++start) {
            const std::size_t label_row = start + seq_len - 1 + horizon;
            const targets::LabelKey key{standardized.row_zone[label_row],
                                        standardized.row_date[label_row]};
            t.labels.push_back(labels.at(key, target).level);
            t.window_zone.push_back(standardized.row_zone[label_row]);
            t.label_date.push_back(standardized.row_date[label_row]);
            for (std::size_t c = 0; c < t.n_channels; ++c)
                for (std::size_t step = 0; step < seq_len; ++step)
                    t.data.push_back(standardized.at(start + step, c));
            ++t.n_windows;
        }
    }
    local.n_windows = t.n_windows;
    if (summary) *summary = local;
    return t;
}

WindowTensor undersample(const WindowTensor& windows, double rate, std::uint64_t seed) {
    if (rate < 0.05 || rate > 1.0)
        throw core::ValidationError("rate", "undersampling rate outside [0.05, 1.0]");
    std::vector<std::size_t> zero_idx;
    for (std::size_t w = 0; w < windows.n_windows; ++w)
        if (windows.labels[w] == 0) zero_idx.push_back(w);
    const std::size_t keep_count =
        static_cast<std::size_t>(std::ceil(rate * static_cast<double>(zero_idx.size())));

    // Seeded Fisher-Yates, then keep the first `keep_count` draws.
    rng::Engine eng(rng::derive_seed(seed, "undersample"));
    for (std::size_t i = zero_idx.size(); i > 1; --i)
        std::swap(zero_idx[i - 1], zero_idx[eng.uniform_index(i)]);
    std::vector<bool> keep(windows.n_windows, true);
    for (std::size_t i = keep_count; i < zero_idx.size(); ++i) keep[zero_idx[i]] = false;

    WindowTensor out;
    out.n_channels = windows.n_channels;
    out.seq_len = windows.seq_len;
    out.horizon = windows.horizon;
    out.target = windows.target;
    out.channel_names = windows.channel_names;
    out.standardization = windows.standardization;
    for (std::size_t w = 0; w < windows.n_windows; ++w) {
        if (!keep[w]) continue;
        out.labels.push_back(windows.labels[w]);
        out.window_zone.push_back(windows.window_zone[w]);
        out.label_date.push_back(windows.label_date[w]);
        const auto* begin = windows.data.data() + w * windows.n_channels * windows.seq_len;
        out.data.insert(out.data.end(), begin, begin + windows.n_channels * windows.seq_len);
        ++out.n_windows;
    }
    return out;
}

}  // namespace wildfire::features
