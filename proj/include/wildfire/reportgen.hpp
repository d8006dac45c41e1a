#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wildfire/core.hpp"
#include "wildfire/metrics.hpp"

namespace wildfire::reportgen {

enum class AgentKind { Hazard, Deviation, Importance };
enum class Confidence { Low, Medium, High };

std::string agent_name(AgentKind a);
std::string confidence_name(Confidence c);
std::string risk_label(int level);  // 0 low .. 4 extreme

/// One statement with the numeric values backing it. Every statement must
/// carry at least one number.
struct Evidence {
    std::string statement;
    std::vector<double> values;
};

struct AgentFinding {
    AgentKind agent = AgentKind::Hazard;
    std::optional<core::TargetKind> target;  // empty = all targets
    core::ZoneId zone;
    core::Date date;
    core::RiskClass severity;
    Confidence confidence = Confidence::Low;
    std::vector<Evidence> evidence;
    bool degraded = false;       // hazard agent ran without a DFE forecast
    bool uninformative = false;  // importance agent saw all-zero importances
};

struct ConfidenceThresholds {
    double high = 0.8;
    double medium = 0.5;
};

/// Per-target class probabilities for one zone-day.
using ForecastSlice = std::map<core::TargetKind, std::array<double, core::num_risk_classes>>;

/// Severity = argmax of the DFE forecast (ties low); confidence from the max
/// probability. Without a DFE forecast, the max argmax of the remaining
/// targets is used and the finding is flagged degraded.
AgentFinding hazard_agent(const ForecastSlice& forecasts, core::ZoneId zone, const core::Date& date,
                          const ConfidenceThresholds& thresholds = {});

/// Severity = predicted class; evidence includes the signed deviation from
/// the modal observed class over the window (mode ties low). A deviation of
/// two or more classes drops confidence to low.
AgentFinding deviation_agent(core::TargetKind target, int predicted_class,
                             const std::array<double, core::num_risk_classes>& probabilities,
                             std::span<const int> observed_window, core::ZoneId zone,
                             const core::Date& date);

/// Evidence lists the top-k features by importance (ties at rank k go in
/// lexicographic name order). Severity copies the hazard agent's.
AgentFinding importance_agent(std::span<const metrics::FeatureImportance> importances,
                              const AgentFinding& hazard, int top_k = 5);

struct ReportContext {
    core::ZoneId zone;
    core::Date date;
    std::array<std::optional<int>, 4> per_target_class;  // indexed by TargetKind
    std::vector<std::string> notes;  // free-form context, flows into the report verbatim
};

struct OperationalReport {
    core::ZoneId zone;
    core::Date date;
    int fused_risk_level = 0;
    std::string fused_risk_label;
    std::array<std::optional<int>, 4> per_target_class;
    std::vector<std::string> justification;
    std::vector<std::string> reliability_notes;
    std::vector<std::string> recommendations;
    std::vector<std::string> context_notes;
    std::string backend;       // provenance
    std::string input_digest;  // digest of the canonical findings payload
    std::vector<std::string> warnings;
};

struct BackendConfig {
    enum class Kind { Template, External };
    Kind kind = Kind::Template;
    std::string endpoint;  // http://host:port/path
    std::string token;     // from the environment
    int timeout_seconds = 10;
};

/// Template backend: pure function of (findings, context) — fused level is
/// the max finding severity, downgraded one level when every confidence is
/// low; recommendations come from a fixed, non-doctrinal catalog. External
/// backend: POSTs the findings and validates the response against the report
/// schema and the no-invention guard, falling back to the template output
/// (with a warning) on any failure.
OperationalReport synthesize_report(std::span<const AgentFinding> findings,
                                    const ReportContext& context, const BackendConfig& backend);

/// Canonical decimal rendering used by the no-invention guard; both the
/// findings payload and response numbers go through it.
std::string canonical_number(double value);

std::string findings_to_json(std::span<const AgentFinding> findings, const ReportContext& context);
std::string report_to_json(const OperationalReport& report);
OperationalReport report_from_json(const std::string& json_text);
std::string render_text(const OperationalReport& report);

/// True iff every number in the candidate report appears among the findings'
/// numeric backings (after canonical formatting). Class levels 0-4 and the
/// schema version are part of the shared vocabulary and always allowed.
bool passes_no_invention_guard(const std::string& response_json,
                               std::span<const AgentFinding> findings,
                               const ReportContext& context);

}  // namespace wildfire::reportgen
