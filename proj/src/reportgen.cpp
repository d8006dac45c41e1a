#include "wildfire/reportgen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <regex>
#include <set>

#include "httplib.h"
#include "json.hpp"

namespace wildfire::reportgen {

using nlohmann::json;

std::string agent_name(AgentKind a) {
    switch (a) {
        case AgentKind::Hazard: return "hazard";
        case AgentKind::Deviation: return "deviation";
        case AgentKind::Importance: return "importance";
    }
    throw std::logic_error("unreachable agent kind");
}

std::string confidence_name(Confidence c) {
    switch (c) {
        case Confidence::Low: return "low";
        case Confidence::Medium: return "medium";
        case Confidence::High: return "high";
    }
    throw std::logic_error("unreachable confidence");
}

std::string risk_label(int level) {
    static const char* labels[] = {"low", "normal", "medium", "high", "extreme"};
    if (level < 0 || level > 4) throw core::ValidationError("level", "risk level outside [0,4]");
    return labels[level];
}

std::string canonical_number(double value) {
    if (value == static_cast<long long>(value) && std::abs(value) < 1e15)
        return std::to_string(static_cast<long long>(value));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", value);
    std::string s(buf);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    return s;
}

namespace {

Confidence confidence_from_probability(double p, const ConfidenceThresholds& t) {
    if (p >= t.high) return Confidence::High;
    if (p >= t.medium) return Confidence::Medium;
    return Confidence::Low;
}

int argmax_low_tie(const std::array<double, core::num_risk_classes>& probs) {
    int best = 0;
    for (int c = 1; c < core::num_risk_classes; ++c)
        if (probs[c] > probs[best]) best = c;
    return best;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : text) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

AgentFinding hazard_agent(const ForecastSlice& forecasts, core::ZoneId zone, const core::Date& date,
                          const ConfidenceThresholds& thresholds) {
    if (forecasts.empty()) throw core::ValidationError("forecasts", "no forecasts for zone-day");
    AgentFinding f;
    f.agent = AgentKind::Hazard;
    f.zone = zone;
    f.date = date;
    const auto dfe = forecasts.find(core::TargetKind::DFE);
    if (dfe != forecasts.end()) {
        const auto& probs = dfe->second;
        const int cls = argmax_low_tie(probs);
        f.target = core::TargetKind::DFE;
        f.severity = core::RiskClass(cls);
        f.confidence = confidence_from_probability(probs[cls], thresholds);
        Evidence ev;
        ev.statement = "DFE forecast class probabilities";
        ev.values.assign(probs.begin(), probs.end());
        f.evidence.push_back(std::move(ev));
    } else {
        // Degraded path: rate from the strongest remaining target.
        int severity = 0;
        for (const auto& [target, probs] : forecasts)
            severity = std::max(severity, argmax_low_tie(probs));
        f.severity = core::RiskClass(severity);
        f.confidence = Confidence::Low;
        f.degraded = true;
        Evidence ev;
        ev.statement = "DFE forecast missing; severity from max class of remaining targets";
        ev.values.push_back(severity);
        f.evidence.push_back(std::move(ev));
    }
    return f;
}

AgentFinding deviation_agent(core::TargetKind target, int predicted_class,
                             const std::array<double, core::num_risk_classes>& probabilities,
                             std::span<const int> observed_window, core::ZoneId zone,
                             const core::Date& date) {
    if (observed_window.empty())
        throw core::ValidationError("observed_window", "empty observation window");
    std::array<int, core::num_risk_classes> counts{};
    for (int c : observed_window) {
        if (c < 0 || c >= core::num_risk_classes)
            throw core::ValidationError("observed_window", "class outside [0,4]");
        counts[c] += 1;
    }
    int modal = 0;
    for (int c = 1; c < core::num_risk_classes; ++c)
        if (counts[c] > counts[modal]) modal = c;

    AgentFinding f;
    f.agent = AgentKind::Deviation;
    f.target = target;
    f.zone = zone;
    f.date = date;
    f.severity = core::RiskClass(predicted_class);
    const int deviation = predicted_class - modal;
    if (std::abs(deviation) >= 2)
        f.confidence = Confidence::Low;  // regime-change claim needs caution
    else if (deviation == 0)
        f.confidence = Confidence::High;
    else
        f.confidence = Confidence::Medium;
    Evidence ev;
    ev.statement = "predicted class vs modal observed class over recent window (signed deviation)";
    ev.values = {static_cast<double>(predicted_class), static_cast<double>(modal),
                 static_cast<double>(deviation), static_cast<double>(observed_window.size())};
    f.evidence.push_back(std::move(ev));
    Evidence probs_ev;
    probs_ev.statement = core::target_name(target) + " forecast class probabilities";
    probs_ev.values.assign(probabilities.begin(), probabilities.end());
    f.evidence.push_back(std::move(probs_ev));
    return f;
}

AgentFinding importance_agent(std::span<const metrics::FeatureImportance> importances,
                              const AgentFinding& hazard, int top_k) {
    AgentFinding f;
    f.agent = AgentKind::Importance;
    f.zone = hazard.zone;
    f.date = hazard.date;
    f.severity = hazard.severity;  // importance findings qualify, not re-rate

    std::vector<metrics::FeatureImportance> sorted(importances.begin(), importances.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.importance != b.importance) return a.importance > b.importance;
        return a.feature < b.feature;
    });
    const std::size_t keep = std::min<std::size_t>(static_cast<std::size_t>(std::max(top_k, 0)),
                                                   sorted.size());
    bool all_zero = true;
    for (const auto& fi : importances)
        if (fi.importance != 0.0) all_zero = false;
    f.uninformative = all_zero || importances.empty();
    f.confidence = f.uninformative ? Confidence::Low : Confidence::Medium;
    for (std::size_t i = 0; i < keep; ++i) {
        Evidence ev;
        ev.statement = "feature importance: " + sorted[i].feature;
        ev.values = {sorted[i].importance};
        f.evidence.push_back(std::move(ev));
    }
    return f;
}

namespace {

const char* target_json_key(int t) {
    static const char* keys[] = {"dfe", "num_fires", "intervention_time", "resources"};
    return keys[t];
}

json finding_to_json(const AgentFinding& f) {
    json j;
    j["agent"] = agent_name(f.agent);
    j["target"] = f.target ? json(core::target_name(*f.target)) : json(nullptr);
    j["zone"] = f.zone.code;
    j["date"] = core::to_iso_string(f.date);
    j["severity"] = f.severity.level;
    j["confidence"] = confidence_name(f.confidence);
    j["degraded"] = f.degraded;
    j["uninformative"] = f.uninformative;
    json evidence = json::array();
    for (const auto& ev : f.evidence) {
        json e;
        e["statement"] = ev.statement;
        e["values"] = ev.values;
        evidence.push_back(std::move(e));
    }
    j["evidence"] = std::move(evidence);
    return j;
}

// Fixed, illustrative (non-doctrinal) recommendation catalog by severity.
std::vector<std::string> recommendations_for(int severity) {
    switch (severity) {
        case 0:
            return {"routine monitoring; no additional posture"};
        case 1:
            return {"maintain standard patrol schedule", "verify water point availability"};
        case 2:
            return {"increase patrol frequency in high-visitation sectors",
                    "brief crews on afternoon wind forecast"};
        case 3:
            return {"pre-position one engine group near the forested interface",
                    "raise patrol frequency to continuous daylight coverage",
                    "coordinate with neighboring zones on mutual aid availability"};
        default:
            return {"pre-position reinforced engine groups at strategic nodes",
                    "activate continuous aerial or lookout surveillance",
                    "restrict access to high-risk massifs per local authority",
                    "place command staff on immediate-response footing"};
    }
}

const std::array<core::TargetKind, 3> kOperationalTargets = {
    core::TargetKind::NumFires, core::TargetKind::InterventionTime, core::TargetKind::Resources};

std::vector<std::string> reliability_notes() {
    std::vector<std::string> notes;
    for (auto t : kOperationalTargets)
        notes.push_back(core::target_name(t) +
                        ": low predictability — intrinsically stochastic, human-driven signal; "
                        "treat forecast classes as indicative only");
    return notes;
}

OperationalReport template_report(std::span<const AgentFinding> findings,
                                  const ReportContext& context, const std::string& digest) {
    OperationalReport r;
    r.zone = context.zone;
    r.date = context.date;
    r.per_target_class = context.per_target_class;
    r.context_notes = context.notes;
    r.backend = "template";
    r.input_digest = digest;

    int fused = 0;
    bool all_low = true;
    for (const auto& f : findings) {
        fused = std::max(fused, f.severity.level);
        if (f.confidence != Confidence::Low) all_low = false;
    }
    if (all_low && fused > 0) fused -= 1;  // downgrade when no finding is confident
    r.fused_risk_level = fused;
    r.fused_risk_label = risk_label(fused);

    for (const auto& f : findings) {
        for (const auto& ev : f.evidence) {
            std::string line = "[" + agent_name(f.agent) + "] " + ev.statement + " (";
            for (std::size_t i = 0; i < ev.values.size(); ++i) {
                if (i > 0) line += ", ";
                line += canonical_number(ev.values[i]);
            }
            line += ")";
            r.justification.push_back(std::move(line));
        }
    }
    r.reliability_notes = reliability_notes();
    r.recommendations = recommendations_for(fused);
    return r;
}

bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Standalone numeric tokens inside free text. Digits glued to identifiers
// ("temp16", "rain_sum_7d") and ISO dates are not numeric claims.
void scan_string_numbers(const std::string& text, std::set<std::string>& out) {
    static const std::regex iso_date(R"(\d{4}-\d{2}-\d{2})");
    const std::string cleaned = std::regex_replace(text, iso_date, " ");
    for (std::size_t i = 0; i < cleaned.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(cleaned[i]))) continue;
        std::size_t start = i;
        if (start > 0 && (cleaned[start - 1] == '-' || cleaned[start - 1] == '+') &&
            (start == 1 || !word_char(cleaned[start - 2])))
            --start;
        if (start > 0 && (word_char(cleaned[start - 1]) || cleaned[start - 1] == '.')) {
            while (i < cleaned.size() && (word_char(cleaned[i]) || cleaned[i] == '.')) ++i;
            continue;
        }
        char* end = nullptr;
        const double value = std::strtod(cleaned.c_str() + start, &end);
        std::size_t stop = static_cast<std::size_t>(end - cleaned.c_str());
        if (stop < cleaned.size() && word_char(cleaned[stop])) {  // identifier suffix
            while (stop < cleaned.size() && (word_char(cleaned[stop]) || cleaned[stop] == '.')) ++stop;
            i = stop;
            continue;
        }
        out.insert(canonical_number(value));
        i = stop == start ? i : stop - 1;
    }
}

void collect_numbers(const json& j, std::set<std::string>& out) {
    if (j.is_number()) {
        out.insert(canonical_number(j.get<double>()));
    } else if (j.is_string()) {
        scan_string_numbers(j.get<std::string>(), out);
    } else if (j.is_array()) {
        for (const auto& e : j) collect_numbers(e, out);
    } else if (j.is_object()) {
        for (const auto& [key, value] : j.items()) {
            // Dates and digests are provenance, not numeric claims.
            if (key == "date" || key == "input_digest") continue;
            collect_numbers(value, out);
        }
    }
}

}  // namespace

std::string findings_to_json(std::span<const AgentFinding> findings, const ReportContext& context) {
    json doc;
    doc["schema_version"] = 1;
    json ctx;
    ctx["zone"] = context.zone.code;
    ctx["date"] = core::to_iso_string(context.date);
    json per_target;
    for (int t = 0; t < 4; ++t)
        per_target[target_json_key(t)] =
            context.per_target_class[t] ? json(*context.per_target_class[t]) : json(nullptr);
    ctx["per_target_class"] = std::move(per_target);
    ctx["notes"] = context.notes;
    doc["context"] = std::move(ctx);
    json arr = json::array();
    for (const auto& f : findings) arr.push_back(finding_to_json(f));
    doc["findings"] = std::move(arr);
    return doc.dump(2);
}

std::string report_to_json(const OperationalReport& r) {
    json doc;
    doc["schema_version"] = 1;
    doc["zone"] = r.zone.code;
    doc["date"] = core::to_iso_string(r.date);
    doc["fused_risk_level"] = r.fused_risk_level;
    doc["fused_risk_label"] = r.fused_risk_label;
    json per_target;
    for (int t = 0; t < 4; ++t)
        per_target[target_json_key(t)] =
            r.per_target_class[t] ? json(*r.per_target_class[t]) : json(nullptr);
    doc["per_target_class"] = std::move(per_target);
    doc["justification"] = r.justification;
    doc["reliability_notes"] = r.reliability_notes;
    doc["recommendations"] = r.recommendations;
    doc["context_notes"] = r.context_notes;
    doc["backend"] = r.backend;
    doc["input_digest"] = r.input_digest;
    doc["warnings"] = r.warnings;
    return doc.dump(2);
}

OperationalReport report_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw core::ValidationError("report", std::string("unparseable report JSON: ") + e.what());
    }
    OperationalReport r;
    try {
        if (doc.at("schema_version").get<int>() != 1)
            throw core::ValidationError("schema_version", "unsupported report schema version");
        r.zone = core::ZoneId{doc.at("zone").get<int>()};
        r.date = core::date_from_iso_string(doc.at("date").get<std::string>());
        r.fused_risk_level = doc.at("fused_risk_level").get<int>();
        if (r.fused_risk_level < 0 || r.fused_risk_level > 4)
            throw core::ValidationError("fused_risk_level", "fused risk level outside [0,4]");
        r.fused_risk_label = doc.at("fused_risk_label").get<std::string>();
        const auto& per_target = doc.at("per_target_class");
        for (int t = 0; t < 4; ++t) {
            const auto& v = per_target.at(target_json_key(t));
            if (!v.is_null()) r.per_target_class[t] = v.get<int>();
        }
        r.justification = doc.at("justification").get<std::vector<std::string>>();
        r.reliability_notes = doc.at("reliability_notes").get<std::vector<std::string>>();
        r.recommendations = doc.at("recommendations").get<std::vector<std::string>>();
        r.context_notes = doc.at("context_notes").get<std::vector<std::string>>();
        r.backend = doc.at("backend").get<std::string>();
        r.input_digest = doc.at("input_digest").get<std::string>();
        if (doc.contains("warnings")) r.warnings = doc.at("warnings").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw core::ValidationError("report", std::string("schema-invalid report: ") + e.what());
    }
    if (r.reliability_notes.size() < kOperationalTargets.size())
        throw core::ValidationError("reliability_notes", "missing operational-target caveats");
    return r;
}

bool passes_no_invention_guard(const std::string& response_json,
                               std::span<const AgentFinding> findings,
                               const ReportContext& context) {
    json doc;
    try {
        doc = json::parse(response_json);
    } catch (const json::parse_error&) {
        return false;
    }
    std::set<std::string> allowed;
    for (const auto& f : findings) {
        allowed.insert(canonical_number(f.severity.level));
        for (const auto& ev : f.evidence)
            for (double v : ev.values) allowed.insert(canonical_number(v));
    }
    for (const auto& c : context.per_target_class)
        if (c) allowed.insert(canonical_number(*c));
    allowed.insert(canonical_number(context.zone.code));
    // Shared vocabulary: class levels and the schema version.
    for (int c = 0; c <= 4; ++c) allowed.insert(canonical_number(c));
    allowed.insert("1");
    // Caller-supplied notes are echoed verbatim, not invented by the backend.
    for (const auto& n : context.notes) scan_string_numbers(n, allowed);

    std::set<std::string> seen;
    collect_numbers(doc, seen);
    for (const auto& token : seen)
        if (!allowed.contains(token)) return false;
    return true;
}

namespace {

struct ParsedEndpoint {
    std::string base;  // scheme://host:port
    std::string path;
};

ParsedEndpoint parse_endpoint(const std::string& endpoint) {
    const auto scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        throw core::ValidationError("endpoint", "endpoint must include a scheme");
    const auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {endpoint, "/"};
    return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

}  // namespace

OperationalReport synthesize_report(std::span<const AgentFinding> findings,
                                    const ReportContext& context, const BackendConfig& backend) {
    if (findings.empty()) throw core::ValidationError("findings", "no findings to synthesize");
    const std::string payload = findings_to_json(findings, context);
    const std::string digest = hex64(fnv1a(payload));

    if (backend.kind == BackendConfig::Kind::Template)
        return template_report(findings, context, digest);

    if (backend.endpoint.empty())
        throw core::ValidationError("endpoint", "external backend requires an endpoint");

    std::string failure;
    const auto parsed = parse_endpoint(backend.endpoint);
    for (int attempt = 0; attempt < 2; ++attempt) {  // one retry
        httplib::Client client(parsed.base);
        client.set_connection_timeout(backend.timeout_seconds, 0);
        client.set_read_timeout(backend.timeout_seconds, 0);
        httplib::Headers headers;
        if (!backend.token.empty()) headers.emplace("Authorization", "Bearer " + backend.token);
        auto res = client.Post(parsed.path, headers, payload, "application/json");
        if (!res || res->status != 200) {
            failure = !res ? "backend unreachable or timed out"
                           : "backend returned status " + std::to_string(res->status);
            continue;
        }
        if (!passes_no_invention_guard(res->body, findings, context)) {
            failure = "response contained a numeric value absent from the findings";
            break;  // tampering is not retried
        }
        try {
            OperationalReport r = report_from_json(res->body);
            r.backend = "external";
            r.input_digest = digest;
            return r;
        } catch (const core::ValidationError& e) {
            failure = std::string("schema-invalid response: ") + e.what();
            break;
        }
    }
    OperationalReport fallback = template_report(findings, context, digest);
    fallback.warnings.push_back("external backend failed (" + failure + "); template fallback used");
    return fallback;
}

std::string render_text(const OperationalReport& r) {
    std::string out;
    out += "OPERATIONAL WILDFIRE RISK REPORT\n";
    out += "zone " + std::to_string(r.zone.code) + "  date " + core::to_iso_string(r.date) + "\n";
    out += "risk qualification: " + std::to_string(r.fused_risk_level) + " (" + r.fused_risk_label +
           ")\n\n";
    out += "per-target classes:\n";
    static const char* names[] = {"DFE", "number of fires", "intervention time", "resources"};
    for (int t = 0; t < 4; ++t) {
        out += "  - " + std::string(names[t]) + ": ";
        out += r.per_target_class[t] ? std::to_string(*r.per_target_class[t]) : std::string("n/a");
        out += "\n";
    }
    out += "\njustification:\n";
    for (const auto& j : r.justification) out += "  - " + j + "\n";
    out += "\nreliability notes:\n";
    for (const auto& n : r.reliability_notes) out += "  - " + n + "\n";
    out += "\nrecommendations:\n";
    for (const auto& rec : r.recommendations) out += "  - " + rec + "\n";
    if (!r.context_notes.empty()) {
        out += "\ncontext notes:\n";
        for (const auto& n : r.context_notes) out += "  - " + n + "\n";
    }
    if (!r.warnings.empty()) {
        out += "\nwarnings:\n";
        for (const auto& w : r.warnings) out += "  - " + w + "\n";
    }
    out += "\nprovenance: backend=" + r.backend + " input_digest=" + r.input_digest + "\n";
    return out;
}

}  // namespace wildfire::reportgen
