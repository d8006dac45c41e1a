#include "wildfire/core.hpp"

#include <cmath>
#include <cstdio>

namespace wildfire::core {

std::string target_name(TargetKind t) {
    switch (t) {
        case TargetKind::DFE: return "dfe";
        case TargetKind::NumFires: return "num_fires";
        case TargetKind::InterventionTime: return "intervention_time";
        case TargetKind::Resources: return "resources";
    }
    throw std::logic_error("unreachable target kind");
}

TargetKind target_from_name(const std::string& name) {
    for (TargetKind t : all_targets)
        if (target_name(t) == name) return t;
    throw ValidationError("target", "unknown target name: " + name);
}

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
    static constexpr int lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return lengths[m - 1];
}

}  // namespace

bool is_valid_date(const Date& d) {
    return d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= days_in_month(d.year, d.month);
}

// Howard Hinnant's days_from_civil / civil_from_days.
std::int64_t to_civil_days(const Date& d) {
    if (!is_valid_date(d)) throw ValidationError("date", "invalid date " + to_iso_string(d));
    const int y = d.year - (d.month <= 2);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (d.month + (d.month > 2 ? -3 : 9)) + 2) / 5 + d.day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

Date from_civil_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned day = doy - (153 * mp + 2) / 5 + 1;
    const unsigned month = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (month <= 2)), static_cast<int>(month), static_cast<int>(day)};
}

Date next_day(const Date& d) { return from_civil_days(to_civil_days(d) + 1); }

int day_of_week(const Date& d) {
    // 1970-01-01 was a Thursday (ISO weekday 4).
    const std::int64_t days = to_civil_days(d);
    const std::int64_t w = ((days + 3) % 7 + 7) % 7;
    return static_cast<int>(w) + 1;
}

std::string to_iso_string(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

Date date_from_iso_string(const std::string& s) {
    int y = 0, m = 0, day = 0;
    if (std::sscanf(s.c_str(), "%d-%d-%d", &y, &m, &day) != 3)
        throw ValidationError("date", "unparseable date: " + s);
    Date d{y, m, day};
    if (!is_valid_date(d)) throw ValidationError("date", "invalid date: " + s);
    return d;
}

namespace {

// Anonymous Gregorian computus (Meeus/Jones/Butcher).
Date easter_sunday(int year) {
    const int a = year % 19;
    const int b = year / 100;
    const int c = year % 100;
    const int d = b / 4;
    const int e = b % 4;
    const int f = (b + 8) / 25;
    const int g = (b - f + 1) / 3;
    const int h = (19 * a + b - d - g + 15) % 30;
    const int i = c / 4;
    const int k = c % 4;
    const int l = (32 + 2 * e + 2 * i - h - k) % 7;
    const int m = (a + 11 * h + 22 * l) / 451;
    const int month = (h + l - 7 * m + 114) / 31;
    const int day = ((h + l - 7 * m + 114) % 31) + 1;
    return Date{year, month, day};
}

int iso_week_number(const Date& d) {
    // Week of the Thursday in this date's week.
    const std::int64_t civil = to_civil_days(d);
    const std::int64_t thursday = civil - (day_of_week(d) - 4);
    const Date th = from_civil_days(thursday);
    const std::int64_t jan1 = to_civil_days(Date{th.year, 1, 1});
    return static_cast<int>((thursday - jan1) / 7) + 1;
}

}  // namespace

bool is_french_holiday(const Date& d, const std::vector<Date>& extra_holidays) {
    for (const Date& h : extra_holidays)
        if (h == d) return true;
    // Fixed national holidays.
    static constexpr std::pair<int, int> fixed[] = {
        {1, 1}, {5, 1}, {5, 8}, {7, 14}, {8, 15}, {11, 1}, {11, 11}, {12, 25}};
    for (auto [m, day] : fixed)
        if (d.month == m && d.day == day) return true;
    // Easter-derived movable feasts: Easter Monday, Ascension, Whit Monday.
    const std::int64_t easter = to_civil_days(easter_sunday(d.year));
    const std::int64_t c = to_civil_days(d);
    return c == easter + 1 || c == easter + 39 || c == easter + 50;
}

CalendarFeatures make_calendar_features(const Date& d, const std::vector<Date>& extra_holidays) {
    if (!is_valid_date(d)) throw ValidationError("date", "invalid date");
    CalendarFeatures f;
    f.day_of_week = day_of_week(d);
    f.iso_week = iso_week_number(d);
    f.is_weekend = f.day_of_week == 6 || f.day_of_week == 7;
    f.is_holiday = is_french_holiday(d, extra_holidays);
    return f;
}

DailyZoneRecord validate_record(const DailyZoneRecord& raw) {
    auto check = [](bool ok, const char* field, const char* message) {
        if (!ok) throw ValidationError(field, message);
    };
    check(is_valid_date(raw.date), "date", "invalid date");
    check(std::isfinite(raw.temperature_12h), "temperature_12h", "non-finite temperature_12h");
    check(std::isfinite(raw.temperature_16h), "temperature_16h", "non-finite temperature_16h");
    check(std::isfinite(raw.dew_point), "dew_point", "non-finite dew_point");
    check(raw.relative_humidity >= 0.0 && raw.relative_humidity <= 100.0, "relative_humidity",
          "relative humidity outside [0,100]");
    check(raw.wind_speed >= 0.0 && std::isfinite(raw.wind_speed), "wind_speed", "negative wind speed");
    check(raw.wind_direction >= 0.0 && raw.wind_direction < 360.0, "wind_direction",
          "wind direction outside [0,360)");
    check(raw.precipitation_24h >= 0.0 && std::isfinite(raw.precipitation_24h), "precipitation_24h",
          "negative precipitation");
    check(raw.snow_height >= 0.0 && std::isfinite(raw.snow_height), "snow_height", "negative snow height");
    check(raw.observed_dfe.level >= 0 && raw.observed_dfe.level <= 4, "observed_dfe",
          "DFE class outside [0,4]");
    check(raw.n_fires >= 0, "n_fires", "negative fire count");
    check(raw.total_intervention_minutes >= 0.0, "total_intervention_minutes",
          "negative intervention minutes");
    check(raw.engines_deployed >= 0, "engines_deployed", "negative engine count");
    if (raw.n_fires == 0 && (raw.total_intervention_minutes != 0.0 || raw.engines_deployed != 0))
        throw ValidationError("n_fires", "zero-fire day with nonzero intervention minutes or engines");
    return raw;
}

}  // namespace wildfire::core
