#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace wildfire::core {

/// Raised by validation routines; carries the offending field name.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& message)
        : std::runtime_error(message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct ZoneId {
    int code = 0;
    auto operator<=>(const ZoneId&) const = default;
};

/// Prediction zones of the study area. Configurable because the source
/// material is ambiguous between six and seven zones; the enumerated data
/// uses seven (61-67), which is the default here.
inline std::vector<ZoneId> default_zones() {
    return {ZoneId{61}, ZoneId{62}, ZoneId{63}, ZoneId{64}, ZoneId{65}, ZoneId{66}, ZoneId{67}};
}

enum class TargetKind { DFE, NumFires, InterventionTime, Resources };

constexpr std::array<TargetKind, 4> all_targets = {
    TargetKind::DFE, TargetKind::NumFires, TargetKind::InterventionTime, TargetKind::Resources};

std::string target_name(TargetKind t);
TargetKind target_from_name(const std::string& name);

/// Ordinal risk level 0 (low) .. 4 (extreme).
struct RiskClass {
    int level = 0;

    RiskClass() = default;
    explicit RiskClass(int lvl) : level(lvl) {
        if (lvl < 0 || lvl > 4) throw ValidationError("risk_class", "risk class out of [0,4]");
    }
    auto operator<=>(const RiskClass&) const = default;
};

constexpr int num_risk_classes = 5;

/// Proleptic Gregorian calendar date. Day arithmetic goes through the civil
/// day count (days since 1970-01-01).
struct Date {
    int year = 1970;
    int month = 1;  // 1-12
    int day = 1;    // 1-31

    auto operator<=>(const Date&) const = default;
};

bool is_valid_date(const Date& d);
std::int64_t to_civil_days(const Date& d);
Date from_civil_days(std::int64_t days);
Date next_day(const Date& d);
/// ISO weekday: 1 = Monday .. 7 = Sunday.
int day_of_week(const Date& d);
std::string to_iso_string(const Date& d);
Date date_from_iso_string(const std::string& s);

struct CalendarFeatures {
    int day_of_week = 1;  // 1 = Monday .. 7 = Sunday
    int iso_week = 1;     // ISO-8601 week number, 1-53
    bool is_weekend = false;
    bool is_holiday = false;
};

/// French national holidays (fixed dates plus the Easter-derived movable
/// feasts). Additional dates can be appended via `extra_holidays`.
bool is_french_holiday(const Date& d, const std::vector<Date>& extra_holidays = {});

CalendarFeatures make_calendar_features(const Date& d, const std::vector<Date>& extra_holidays = {});

/// One zone-day of weather, calendar context and observed operational outcomes.
struct DailyZoneRecord {
    ZoneId zone;
    Date date;
    double temperature_12h = 0.0;  // degC
    double temperature_16h = 0.0;  // degC
    double dew_point = 0.0;        // degC
    double relative_humidity = 0.0;  // % in [0,100]
    double wind_speed = 0.0;       // km/h, >= 0
    double wind_direction = 0.0;   // deg in [0,360)
    double precipitation_24h = 0.0;  // mm, >= 0
    double snow_height = 0.0;      // cm, >= 0
    RiskClass observed_dfe;
    int n_fires = 0;
    double total_intervention_minutes = 0.0;
    int engines_deployed = 0;
};

/// Checks every field bound plus the cross-field rule that a zero-fire day
/// carries zero intervention minutes and zero engines. Returns the record
/// unchanged on success; throws ValidationError naming the first offending
/// field otherwise.
DailyZoneRecord validate_record(const DailyZoneRecord& raw);

}  // namespace wildfire::core
