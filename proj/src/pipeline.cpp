#include "wildfire/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "wildfire/rng.hpp"

namespace wildfire::pipeline {

using nlohmann::json;

PipelineConfig::PipelineConfig() {
    generator = synthgen::default_config();
    for (int i = 1; i <= 20; ++i) scan.rates.push_back(i * 0.05);
    logreg_rho_grid = {0.3, 0.5, 0.7, 1.0};
}

PipelineConfig default_pipeline_config() { return PipelineConfig{}; }

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void bad_field(const std::string& path, const std::string& why) {
    throw ConfigError(path, "config field '" + path + "': " + why);
}

double as_double(const json& v, const std::string& path) {
    if (!v.is_number()) bad_field(path, "expected a number");
    return v.get<double>();
}

int as_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) bad_field(path, "expected an integer");
    return v.get<int>();
}

std::uint64_t as_seed(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !v.is_number_integer()) bad_field(path, "expected an integer");
    return v.get<std::uint64_t>();
}

std::vector<double> as_double_list(const json& v, const std::string& path) {
    if (!v.is_array()) bad_field(path, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(as_double(e, path));
    return out;
}

std::vector<int> as_int_list(const json& v, const std::string& path) {
    if (!v.is_array()) bad_field(path, "expected an array of integers");
    std::vector<int> out;
    for (const auto& e : v) out.push_back(as_int(e, path));
    return out;
}

void parse_noise(const json& j, synthgen::WeatherNoise& n, const std::string& prefix) {
    for (const auto& [key, v] : j.items()) {
        const std::string path = prefix + "." + key;
        if (key == "ar_coefficient") n.ar_coefficient = as_double(v, path);
        else if (key == "temp_sigma") n.temp_sigma = as_double(v, path);
        else if (key == "rh_sigma") n.rh_sigma = as_double(v, path);
        else if (key == "wind_mean") n.wind_mean = as_double(v, path);
        else if (key == "wind_sigma") n.wind_sigma = as_double(v, path);
        else if (key == "wet_day_prob") n.wet_day_prob = as_double(v, path);
        else if (key == "rain_log_mu") n.rain_log_mu = as_double(v, path);
        else if (key == "rain_log_sigma") n.rain_log_sigma = as_double(v, path);
        else if (key == "base_temperature") n.base_temperature = as_double(v, path);
        else bad_field(path, "unknown key");
    }
}

void parse_profiles(const json& j, std::vector<synthgen::ZoneProfile>& profiles,
                    const std::string& prefix) {
    if (!j.is_array()) bad_field(prefix, "expected an array of zone profiles");
    profiles.clear();
    for (const auto& entry : j) {
        synthgen::ZoneProfile p;
        for (const auto& [key, v] : entry.items()) {
            const std::string path = prefix + "." + key;
            if (key == "zone") p.zone = core::ZoneId{as_int(v, path)};
            else if (key == "urbanization") p.urbanization = as_double(v, path);
            else if (key == "forest_cover") p.forest_cover = as_double(v, path);
            else if (key == "base_ignition_rate") p.base_ignition_rate = as_double(v, path);
            else if (key == "access_difficulty") p.access_difficulty = as_double(v, path);
            else if (key == "seasonal_amplitude") p.seasonal_amplitude = as_double(v, path);
            else if (key == "tourism_boost") p.tourism_boost = as_double(v, path);
            else bad_field(path, "unknown key");
        }
        profiles.push_back(p);
    }
}

void parse_generator(const json& j, synthgen::GeneratorConfig& g) {
    for (const auto& [key, v] : j.items()) {
        const std::string path = "generator." + key;
        if (key == "seed") g.seed = as_seed(v, path);
        else if (key == "first_year") g.first_year = as_int(v, path);
        else if (key == "last_year") g.last_year = as_int(v, path);
        else if (key == "train_last_year") g.train_last_year = as_int(v, path);
        else if (key == "noise") parse_noise(v, g.noise, path);
        else if (key == "profiles") parse_profiles(v, g.profiles, path);
        else bad_field(path, "unknown key");
    }
}

void parse_gru(const json& j, nn::GruConfig& g) {
    for (const auto& [key, v] : j.items()) {
        const std::string path = "gru." + key;
        if (key == "seq_len") g.seq_len = as_int(v, path);
        else if (key == "hidden_size") g.hidden_size = as_int(v, path);
        else if (key == "num_layers") g.num_layers = as_int(v, path);
        else if (key == "head_hidden") g.head_hidden = as_int(v, path);
        else if (key == "embedding") g.embedding = as_int(v, path);
        else if (key == "dropout") g.dropout = as_double(v, path);
        else bad_field(path, "unknown key");
    }
}

void parse_train(const json& j, nn::TrainConfig& t) {
    for (const auto& [key, v] : j.items()) {
        const std::string path = "train." + key;
        if (key == "learning_rate") t.learning_rate = as_double(v, path);
        else if (key == "max_epochs") t.max_epochs = as_int(v, path);
        else if (key == "patience") t.patience = as_int(v, path);
        else if (key == "batch_size") t.batch_size = as_int(v, path);
        else if (key == "seed") t.seed = as_seed(v, path);
        else bad_field(path, "unknown key");
    }
}

json profiles_to_json(const std::vector<synthgen::ZoneProfile>& profiles) {
    json arr = json::array();
    for (const auto& p : profiles) {
        json e;
        e["zone"] = p.zone.code;
        e["urbanization"] = p.urbanization;
        e["forest_cover"] = p.forest_cover;
        e["base_ignition_rate"] = p.base_ignition_rate;
        e["access_difficulty"] = p.access_difficulty;
        e["seasonal_amplitude"] = p.seasonal_amplitude;
        e["tourism_boost"] = p.tourism_boost;
        arr.push_back(std::move(e));
    }
    return arr;
}

json config_to_jobj(const PipelineConfig& c) {
    json j;
    json gen;
    gen["seed"] = c.generator.seed;
    gen["first_year"] = c.generator.first_year;
    gen["last_year"] = c.generator.last_year;
    gen["train_last_year"] = c.generator.train_last_year;
    gen["noise"] = {{"ar_coefficient", c.generator.noise.ar_coefficient},
                    {"temp_sigma", c.generator.noise.temp_sigma},
                    {"rh_sigma", c.generator.noise.rh_sigma},
                    {"wind_mean", c.generator.noise.wind_mean},
                    {"wind_sigma", c.generator.noise.wind_sigma},
                    {"wet_day_prob", c.generator.noise.wet_day_prob},
                    {"rain_log_mu", c.generator.noise.rain_log_mu},
                    {"rain_log_sigma", c.generator.noise.rain_log_sigma},
                    {"base_temperature", c.generator.noise.base_temperature}};
    gen["profiles"] = profiles_to_json(c.generator.profiles);
    j["generator"] = std::move(gen);
    j["split"] = {{"train_last", c.split.train_last},
                  {"validation", c.split.validation},
                  {"test", c.split.test}};
    j["features"] = {{"variance_threshold", c.features.variance_threshold},
                     {"correlation_threshold", c.features.correlation_threshold}};
    j["gru"] = {{"seq_len", c.gru.seq_len},         {"hidden_size", c.gru.hidden_size},
                {"num_layers", c.gru.num_layers},   {"head_hidden", c.gru.head_hidden},
                {"embedding", c.gru.embedding},     {"dropout", c.gru.dropout}};
    j["train"] = {{"learning_rate", c.train.learning_rate},
                  {"max_epochs", c.train.max_epochs},
                  {"patience", c.train.patience},
                  {"batch_size", c.train.batch_size},
                  {"seed", c.train.seed}};
    j["scan"] = {{"rates", c.scan.rates}, {"max_epochs", c.scan.max_epochs}};
    j["logreg"] = {{"max_iterations", c.logreg.max_iterations},
                   {"learning_rate", c.logreg.learning_rate},
                   {"tolerance", c.logreg.tolerance},
                   {"seed", c.logreg.seed}};
    j["logreg_rho_grid"] = c.logreg_rho_grid;
    j["report"] = {{"confidence_high", c.report.confidence.high},
                   {"confidence_medium", c.report.confidence.medium},
                   {"observation_window_days", c.report.observation_window_days},
                   {"importance_repeats", c.report.importance_repeats},
                   {"importance_top_k", c.report.importance_top_k}};
    j["horizons"] = c.horizons;
    return j;
}

PipelineConfig config_from_jobj(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config", "top-level config must be an object");
    PipelineConfig c;
    for (const auto& [key, v] : doc.items()) {
        if (key == "generator") parse_generator(v, c.generator);
        else if (key == "split") {
            for (const auto& [k2, v2] : v.items()) {
                const std::string path = "split." + k2;
                if (k2 == "train_last") c.split.train_last = as_int(v2, path);
                else if (k2 == "validation") c.split.validation = as_int(v2, path);
                else if (k2 == "test") c.split.test = as_int(v2, path);
                else bad_field(path, "unknown key");
            }
        } else if (key == "features") {
            for (const auto& [k2, v2] : v.items()) {
                const std::string path = "features." + k2;
                if (k2 == "variance_threshold") c.features.variance_threshold = as_double(v2, path);
                else if (k2 == "correlation_threshold")
                    c.features.correlation_threshold = as_double(v2, path);
                else bad_field(path, "unknown key");
            }
        } else if (key == "gru") parse_gru(v, c.gru);
        else if (key == "train") parse_train(v, c.train);
        else if (key == "scan") {
            for (const auto& [k2, v2] : v.items()) {
                const std::string path = "scan." + k2;
                if (k2 == "rates") c.scan.rates = as_double_list(v2, path);
                else if (k2 == "max_epochs") c.scan.max_epochs = as_int(v2, path);
                else bad_field(path, "unknown key");
            }
        } else if (key == "logreg") {
            for (const auto& [k2, v2] : v.items()) {
                const std::string path = "logreg." + k2;
                if (k2 == "max_iterations") c.logreg.max_iterations = as_int(v2, path);
                else if (k2 == "learning_rate") c.logreg.learning_rate = as_double(v2, path);
                else if (k2 == "tolerance") c.logreg.tolerance = as_double(v2, path);
                else if (k2 == "seed") c.logreg.seed = as_seed(v2, path);
                else bad_field(path, "unknown key");
            }
        } else if (key == "logreg_rho_grid") c.logreg_rho_grid = as_double_list(v, key);
        else if (key == "report") {
            for (const auto& [k2, v2] : v.items()) {
                const std::string path = "report." + k2;
                if (k2 == "confidence_high") c.report.confidence.high = as_double(v2, path);
                else if (k2 == "confidence_medium") c.report.confidence.medium = as_double(v2, path);
                else if (k2 == "observation_window_days")
                    c.report.observation_window_days = as_int(v2, path);
                else if (k2 == "importance_repeats") c.report.importance_repeats = as_int(v2, path);
                else if (k2 == "importance_top_k") c.report.importance_top_k = as_int(v2, path);
                else bad_field(path, "unknown key");
            }
        } else if (key == "horizons") c.horizons = as_int_list(v, key);
        else bad_field(key, "unknown key");
    }
    if (c.horizons.empty()) bad_field("horizons", "must list at least one horizon");
    for (int h : c.horizons)
        if (h < 1) bad_field("horizons", "horizons must be >= 1");
    if (c.scan.rates.empty()) bad_field("scan.rates", "must list at least one rate");
    for (double r : c.scan.rates)
        if (r < 0.05 || r > 1.0) bad_field("scan.rates", "rates must lie in [0.05, 1.0]");
    return c;
}

}  // namespace

PipelineConfig config_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config", std::string("unparseable config JSON: ") + e.what());
    }
    return config_from_jobj(doc);
}

PipelineConfig load_config(const std::string& path) { return config_from_json(read_file(path)); }

std::string config_to_json(const PipelineConfig& config) { return config_to_jobj(config).dump(2); }

// ---------------------------------------------------------------------------
// Files, CSV, digests
// ---------------------------------------------------------------------------

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file for reading: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open file for writing: " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string digest_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : bytes) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

constexpr const char* csv_header =
    "zone,date,temp12,temp16,dewpoint,rh,wind_speed,wind_dir,precip24,snow,dfe,n_fires,"
    "intervention_minutes,engines";

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    std::string s(buf);
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
    if (s == "-0") s = "0";
    return s;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char c : line) {
        if (c == ',') {
            out.push_back(field);
            field.clear();
        } else {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

}  // namespace

std::string dataset_to_csv(std::span<const core::DailyZoneRecord> records) {
    std::string out = csv_header;
    out += '\n';
    for (const auto& r : records) {
        out += std::to_string(r.zone.code);
        out += ',';
        out += core::to_iso_string(r.date);
        out += ',';
        out += fmt_double(r.temperature_12h);
        out += ',';
        out += fmt_double(r.temperature_16h);
        out += ',';
        out += fmt_double(r.dew_point);
        out += ',';
        out += fmt_double(r.relative_humidity);
        out += ',';
        out += fmt_double(r.wind_speed);
        out += ',';
        out += fmt_double(r.wind_direction);
        out += ',';
        out += fmt_double(r.precipitation_24h);
        out += ',';
        out += fmt_double(r.snow_height);
        out += ',';
        out += std::to_string(r.observed_dfe.level);
        out += ',';
        out += std::to_string(r.n_fires);
        out += ',';
        out += fmt_double(r.total_intervention_minutes);
        out += ',';
        out += std::to_string(r.engines_deployed);
        out += '\n';
    }
    return out;
}

std::vector<core::DailyZoneRecord> dataset_from_csv(const std::string& csv_text) {
    std::istringstream in(csv_text);
    std::string line;
    if (!std::getline(in, line)) throw core::ValidationError("dataset", "empty dataset file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != csv_header)
        throw core::ValidationError("header", "dataset header does not match the documented schema");
    std::vector<core::DailyZoneRecord> records;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != 14)
            throw core::ValidationError("row " + std::to_string(row),
                                        "expected 14 fields, got " + std::to_string(fields.size()));
        try {
            core::DailyZoneRecord r;
            r.zone = core::ZoneId{std::stoi(fields[0])};
            r.date = core::date_from_iso_string(fields[1]);
            r.temperature_12h = std::stod(fields[2]);
            r.temperature_16h = std::stod(fields[3]);
            r.dew_point = std::stod(fields[4]);
            r.relative_humidity = std::stod(fields[5]);
            r.wind_speed = std::stod(fields[6]);
            r.wind_direction = std::stod(fields[7]);
            r.precipitation_24h = std::stod(fields[8]);
            r.snow_height = std::stod(fields[9]);
            r.observed_dfe = core::RiskClass(std::stoi(fields[10]));
            r.n_fires = std::stoi(fields[11]);
            r.total_intervention_minutes = std::stod(fields[12]);
            r.engines_deployed = std::stoi(fields[13]);
            records.push_back(core::validate_record(r));
        } catch (const core::ValidationError& e) {
            throw core::ValidationError(e.field(),
                                        "row " + std::to_string(row) + ": " + e.what());
        } catch (const std::exception& e) {
            throw core::ValidationError("row " + std::to_string(row),
                                        std::string("unparseable field: ") + e.what());
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// Manifest JSON
// ---------------------------------------------------------------------------

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const auto rows = j.size();
    const auto cols = rows ? j.at(0).size() : 0;
    Eigen::MatrixXd m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = j.at(r).at(c).get<double>();
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v(i) = j.at(i).get<double>();
    return v;
}

json binning_to_json(const targets::BinningModel& b) {
    json j;
    j["target"] = core::target_name(b.target);
    j["centroids"] = b.centroids;
    j["boundaries"] = b.boundaries;
    j["fitted_first_year"] = b.fitted_first_year;
    j["fitted_last_year"] = b.fitted_last_year;
    return j;
}

targets::BinningModel binning_from_json(const json& j) {
    targets::BinningModel b;
    b.target = core::target_from_name(j.at("target").get<std::string>());
    b.centroids = j.at("centroids").get<std::array<double, 4>>();
    b.boundaries = j.at("boundaries").get<std::array<double, 3>>();
    b.fitted_first_year = j.at("fitted_first_year").get<int>();
    b.fitted_last_year = j.at("fitted_last_year").get<int>();
    return b;
}

json evaluation_to_json(const ModelEvaluation& e) {
    json j;
    j["target"] = core::target_name(e.report.target);
    j["split"] = e.report.split;
    j["model"] = e.report.model;
    j["iou"] = e.report.iou;
    j["macro_jaccard"] = e.report.jaccard.macro_mean;
    json per_class = json::array();
    for (const auto& v : e.report.jaccard.per_class)
        per_class.push_back(v ? json(*v) : json(nullptr));
    j["per_class_jaccard"] = std::move(per_class);
    j["confusion"] = e.report.confusion;
    j["n_samples"] = e.report.n_samples;
    json preds = json::array();
    for (const auto& p : e.predictions) {
        json row;
        row["zone"] = p.zone.code;
        row["date"] = core::to_iso_string(p.date);
        row["truth"] = p.truth;
        row["predicted"] = p.predicted;
        if (!p.probabilities.empty()) row["probabilities"] = p.probabilities;
        preds.push_back(std::move(row));
    }
    j["predictions"] = std::move(preds);
    return j;
}

ModelEvaluation evaluation_from_json(const json& j) {
    ModelEvaluation e;
    e.report.target = core::target_from_name(j.at("target").get<std::string>());
    e.report.split = j.at("split").get<std::string>();
    e.report.model = j.at("model").get<std::string>();
    e.report.iou = j.at("iou").get<double>();
    e.report.jaccard.macro_mean = j.at("macro_jaccard").get<double>();
    const auto& per_class = j.at("per_class_jaccard");
    for (std::size_t i = 0; i < per_class.size() && i < core::num_risk_classes; ++i)
        if (!per_class.at(i).is_null()) e.report.jaccard.per_class[i] = per_class.at(i).get<double>();
    e.report.confusion = j.at("confusion").get<metrics::ConfusionMatrix>();
    e.report.n_samples = j.at("n_samples").get<std::size_t>();
    for (const auto& row : j.at("predictions")) {
        PredictionRecord p;
        p.zone = core::ZoneId{row.at("zone").get<int>()};
        p.date = core::date_from_iso_string(row.at("date").get<std::string>());
        p.truth = row.at("truth").get<int>();
        p.predicted = row.at("predicted").get<int>();
        if (row.contains("probabilities"))
            p.probabilities = row.at("probabilities").get<std::vector<double>>();
        e.predictions.push_back(std::move(p));
    }
    return e;
}

json artifacts_to_json(const TargetArtifacts& a) {
    json j;
    j["target"] = core::target_name(a.target);
    j["horizon"] = a.horizon;
    j["binning"] = a.binning ? binning_to_json(*a.binning) : json(nullptr);
    j["sampling"] = {{"rate", a.sampling.rate},
                     {"seed", a.sampling.seed},
                     {"selected_by", a.sampling.selected_by}};
    j["checkpoint_path"] = a.checkpoint_path;
    j["checkpoint_digest"] = a.checkpoint_digest;
    json lr;
    lr["weights"] = matrix_to_json(a.logreg.weights);
    lr["intercepts"] = vector_to_json(a.logreg.intercepts);
    lr["chosen_rho"] = a.logreg.chosen_rho;
    lr["chosen_val_iou"] = a.logreg.chosen_val_iou;
    lr["converged"] = a.logreg.converged;
    lr["final_gradient_norm"] = a.logreg.final_gradient_norm;
    j["logreg"] = std::move(lr);
    json wm;
    json entries = json::array();
    for (const auto& [key, cls] : a.week_mode.mode)
        entries.push_back({{"zone", key.first}, {"week", key.second}, {"class", cls}});
    wm["entries"] = std::move(entries);
    wm["fallback"] = a.week_mode.fallback;
    j["week_mode"] = std::move(wm);
    json po;
    json rates = json::array();
    for (const auto& [zone, lambda] : a.poisson.lambda)
        rates.push_back({{"zone", zone}, {"lambda", lambda}});
    po["rates"] = std::move(rates);
    po["pooled"] = a.poisson.pooled;
    j["poisson"] = std::move(po);
    json evals;
    for (const auto& [split, by_model] : a.evaluations) {
        json models;
        for (const auto& [model, evaluation] : by_model) models[model] = evaluation_to_json(evaluation);
        evals[split] = std::move(models);
    }
    j["evaluations"] = std::move(evals);
    return j;
}

TargetArtifacts artifacts_from_json(const json& j) {
    TargetArtifacts a;
    a.target = core::target_from_name(j.at("target").get<std::string>());
    a.horizon = j.at("horizon").get<int>();
    if (!j.at("binning").is_null()) a.binning = binning_from_json(j.at("binning"));
    a.sampling.rate = j.at("sampling").at("rate").get<double>();
    a.sampling.seed = j.at("sampling").at("seed").get<std::uint64_t>();
    a.sampling.selected_by = j.at("sampling").at("selected_by").get<double>();
    a.checkpoint_path = j.at("checkpoint_path").get<std::string>();
    a.checkpoint_digest = j.at("checkpoint_digest").get<std::string>();
    const auto& lr = j.at("logreg");
    a.logreg.weights = matrix_from_json(lr.at("weights"));
    a.logreg.intercepts = vector_from_json(lr.at("intercepts"));
    a.logreg.chosen_rho = lr.at("chosen_rho").get<double>();
    a.logreg.chosen_val_iou = lr.at("chosen_val_iou").get<double>();
    a.logreg.converged = lr.at("converged").get<bool>();
    a.logreg.final_gradient_norm = lr.at("final_gradient_norm").get<double>();
    for (const auto& e : j.at("week_mode").at("entries"))
        a.week_mode.mode[{e.at("zone").get<int>(), e.at("week").get<int>()}] =
            e.at("class").get<int>();
    a.week_mode.fallback = j.at("week_mode").at("fallback").get<int>();
    for (const auto& e : j.at("poisson").at("rates"))
        a.poisson.lambda[e.at("zone").get<int>()] = e.at("lambda").get<double>();
    a.poisson.pooled = j.at("poisson").at("pooled").get<double>();
    for (const auto& [split, by_model] : j.at("evaluations").items())
        for (const auto& [model, evaluation] : by_model.items())
            a.evaluations[split][model] = evaluation_from_json(evaluation);
    return a;
}

}  // namespace

std::string manifest_to_json(const ExperimentManifest& m) {
    json j;
    j["version"] = m.version;
    j["config"] = config_to_jobj(m.config);
    j["dataset_path"] = m.dataset_path;
    j["dataset_digest"] = m.dataset_digest;
    j["kept_columns"] = m.kept_columns;
    j["standardization"] = {{"columns", m.standardization.columns},
                            {"mean", m.standardization.mean},
                            {"stddev", m.standardization.stddev}};
    json arr = json::array();
    for (const auto& a : m.artifacts) arr.push_back(artifacts_to_json(a));
    j["artifacts"] = std::move(arr);
    return j.dump(2);
}

ExperimentManifest manifest_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw core::ValidationError("manifest", std::string("unparseable manifest: ") + e.what());
    }
    ExperimentManifest m;
    try {
        m.version = doc.at("version").get<std::string>();
        m.config = config_from_jobj(doc.at("config"));
        m.dataset_path = doc.at("dataset_path").get<std::string>();
        m.dataset_digest = doc.at("dataset_digest").get<std::string>();
        m.kept_columns = doc.at("kept_columns").get<std::vector<std::string>>();
        m.standardization.columns =
            doc.at("standardization").at("columns").get<std::vector<std::string>>();
        m.standardization.mean = doc.at("standardization").at("mean").get<std::vector<double>>();
        m.standardization.stddev = doc.at("standardization").at("stddev").get<std::vector<double>>();
        for (const auto& a : doc.at("artifacts")) m.artifacts.push_back(artifacts_from_json(a));
    } catch (const json::exception& e) {
        throw core::ValidationError("manifest", std::string("schema-invalid manifest: ") + e.what());
    }
    return m;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

std::string cmd_synth(const PipelineConfig& config, const std::string& out_path) {
    const auto records = synthgen::build_dataset(config.generator);
    write_file(out_path, dataset_to_csv(records));
    std::set<int> zones;
    std::set<int> years;
    for (const auto& r : records) {
        zones.insert(r.zone.code);
        years.insert(r.date.year);
    }
    std::ostringstream summary;
    summary << "wrote " << records.size() << " rows (" << zones.size() << " zones, " << years.size()
            << " years) to " << out_path;
    return summary.str();
}

namespace {

std::vector<std::size_t> rows_for_years(const features::FeatureMatrix& m, int first, int last) {
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < m.n_rows(); ++r)
        if (m.row_date[r].year >= first && m.row_date[r].year <= last) rows.push_back(r);
    return rows;
}

/// Identity binning used only by the Poisson baseline on the DFE target,
/// where the "count" is the class itself.
targets::BinningModel identity_binning() {
    targets::BinningModel b;
    b.target = core::TargetKind::DFE;
    b.centroids = {1.0, 2.0, 3.0, 4.0};
    b.boundaries = {1.5, 2.5, 3.5};
    return b;
}

double raw_target_value(const core::DailyZoneRecord& r, core::TargetKind target) {
    switch (target) {
        case core::TargetKind::DFE: return static_cast<double>(r.observed_dfe.level);
        case core::TargetKind::NumFires: return static_cast<double>(r.n_fires);
        case core::TargetKind::InterventionTime: return r.total_intervention_minutes;
        case core::TargetKind::Resources: return static_cast<double>(r.engines_deployed);
    }
    throw std::logic_error("unreachable target kind");
}

ModelEvaluation evaluate_model(core::TargetKind target, const std::string& split,
                               const std::string& model, const features::WindowTensor& windows,
                               std::vector<int> predicted,
                               std::vector<std::vector<double>> probabilities = {}) {
    ModelEvaluation e;
    e.report = metrics::evaluate(target, split, model, windows.labels, predicted);
    for (std::size_t i = 0; i < windows.n_windows; ++i) {
        PredictionRecord p;
        p.zone = windows.window_zone[i];
        p.date = windows.label_date[i];
        p.truth = windows.labels[i];
        p.predicted = predicted[i];
        if (!probabilities.empty()) p.probabilities = probabilities[i];
        e.predictions.push_back(std::move(p));
    }
    return e;
}

std::vector<int> persistence_for_windows(const features::WindowTensor& windows,
                                         const targets::LabelTable& labels,
                                         core::TargetKind target, int horizon) {
    std::vector<int> out;
    out.reserve(windows.n_windows);
    for (std::size_t i = 0; i < windows.n_windows; ++i) {
        const auto past =
            core::from_civil_days(core::to_civil_days(windows.label_date[i]) - horizon);
        const auto it = labels.labels.find({windows.window_zone[i], past});
        out.push_back(it == labels.labels.end()
                          ? 0
                          : it->second[static_cast<std::size_t>(target)].level);
    }
    return out;
}

}  // namespace

std::vector<std::string> model_names() {
    return {"gru", "persistence", "week_mode", "poisson", "logreg"};
}

ExperimentManifest cmd_train(const PipelineConfig& config, const TrainRequest& request) {
    PipelineConfig cfg = config;
    if (request.seed_override) {
        cfg.train.seed = *request.seed_override;
        cfg.logreg.seed = *request.seed_override;
    }
    if (request.horizon_override) cfg.horizons = {*request.horizon_override};
    cfg.gru.validate();
    cfg.train.validate();

    const std::string csv = read_file(request.dataset_path);
    const auto dataset = dataset_from_csv(csv);
    if (dataset.empty()) throw core::ValidationError("dataset", "dataset has no rows");

    ExperimentManifest manifest;
    manifest.config = cfg;
    manifest.dataset_path = request.dataset_path;
    manifest.dataset_digest = digest_hex(csv);

    int first_year = dataset.front().date.year;
    for (const auto& r : dataset) first_year = std::min(first_year, r.date.year);

    // Binning models on training years only.
    std::map<core::TargetKind, targets::BinningModel> binning;
    for (auto target : {core::TargetKind::NumFires, core::TargetKind::InterventionTime,
                        core::TargetKind::Resources}) {
        const auto values =
            targets::positive_target_values(dataset, target, first_year, cfg.split.train_last);
        binning[target] = targets::fit_binning(
            values, target, rng::derive_seed(cfg.train.seed, "binning:" + core::target_name(target)));
    }
    const auto labels =
        targets::build_labels(dataset, binning.at(core::TargetKind::NumFires),
                              binning.at(core::TargetKind::InterventionTime),
                              binning.at(core::TargetKind::Resources));

    // Features: assemble, filter on training rows, standardize.
    const auto full = features::assemble_features(dataset, labels);
    const auto train_rows = rows_for_years(full, first_year, cfg.split.train_last);
    const auto val_rows = rows_for_years(full, cfg.split.validation, cfg.split.validation);
    const auto test_rows = rows_for_years(full, cfg.split.test, cfg.split.test);
    if (train_rows.empty() || val_rows.empty() || test_rows.empty())
        throw core::ValidationError("split", "one of the year splits selected no rows");

    const auto train_full = full.select_rows(train_rows);
    const auto after_variance =
        features::variance_filter(train_full, cfg.features.variance_threshold);
    const auto train_v = train_full.select_columns(after_variance);
    const auto kept = features::correlation_filter(train_v, cfg.features.correlation_threshold);
    if (kept.empty()) throw core::ValidationError("features", "all feature columns filtered out");

    const auto filtered = full.select_columns(kept);
    const auto standardization = features::fit_standardization(filtered.select_rows(train_rows));
    const auto standardized = features::apply_standardization(filtered, standardization);
    manifest.kept_columns = kept;
    manifest.standardization = standardization;

    const auto train_matrix = standardized.select_rows(train_rows);
    const auto val_matrix = standardized.select_rows(val_rows);
    const auto test_matrix = standardized.select_rows(test_rows);

    std::vector<core::TargetKind> requested(request.targets);
    if (requested.empty())
        requested.assign(core::all_targets.begin(), core::all_targets.end());

    nn::GruConfig gru = cfg.gru;
    gru.input_channels = static_cast<int>(kept.size());
    gru.validate();

    for (auto target : requested) {
        // Sampling plan is selected once per target and shared across horizons.
        features::SamplingPlan plan;
        bool plan_ready = false;
        for (int horizon : cfg.horizons) {
            const auto train_w =
                features::make_windows(train_matrix, labels, gru.seq_len, horizon, target);
            const auto val_w =
                features::make_windows(val_matrix, labels, gru.seq_len, horizon, target);
            const auto test_w =
                features::make_windows(test_matrix, labels, gru.seq_len, horizon, target);
            if (train_w.n_windows == 0 || val_w.n_windows == 0 || test_w.n_windows == 0)
                throw core::ValidationError("windows", "a split produced no windows for target " +
                                                           core::target_name(target));

            nn::TrainConfig tc = cfg.train;
            tc.horizon = horizon;

            if (!plan_ready) {
                const std::uint64_t plan_seed =
                    rng::derive_seed(cfg.train.seed, "undersample:" + core::target_name(target));
                if (cfg.scan.rates.size() == 1) {
                    plan = {cfg.scan.rates.front(), plan_seed, 0.0};
                } else {
                    nn::TrainConfig scan_tc = tc;
                    scan_tc.max_epochs = cfg.scan.max_epochs;
                    scan_tc.patience = cfg.scan.max_epochs;
                    plan = select_sampling_rate(
                        cfg.scan.rates, plan_seed, [&](double rate, std::uint64_t seed) {
                            const auto sampled = features::undersample(train_w, rate, seed);
                            return nn::train(sampled, val_w, gru, scan_tc).best_val_iou;
                        });
                }
                plan_ready = true;
            }

            const auto sampled = features::undersample(train_w, plan.rate, plan.seed);
            auto result = nn::train(sampled, val_w, gru, tc);

            TargetArtifacts art;
            art.target = target;
            art.horizon = horizon;
            if (target != core::TargetKind::DFE) art.binning = binning.at(target);
            art.sampling = plan;

            const std::string checkpoint = nn::checkpoint_to_json(result.best_model, tc,
                                                                  result.best_val_iou);
            art.checkpoint_path = (std::filesystem::path(request.out_dir) /
                                   ("checkpoint_" + core::target_name(target) + "_h" +
                                    std::to_string(horizon) + ".json"))
                                      .string();
            write_file(art.checkpoint_path, checkpoint);
            art.checkpoint_digest = digest_hex(checkpoint);

            // Baselines fitted on the same training material.
            std::vector<baselines::LabeledDay> train_days;
            std::vector<baselines::CountDay> train_counts;
            for (const auto& r : dataset) {
                if (r.date.year > cfg.split.train_last) continue;
                train_days.push_back(
                    {r.zone, r.date, labels.at({r.zone, r.date}, target).level});
                train_counts.push_back({r.zone, raw_target_value(r, target)});
            }
            art.week_mode = baselines::week_mode_fit(train_days);
            art.poisson = baselines::poisson_fit(train_counts);

            const Eigen::MatrixXd lr_train_x = baselines::last_day_features(train_w);
            const Eigen::MatrixXd lr_val_x = baselines::last_day_features(val_w);
            baselines::LogRegOptions lr_opts = cfg.logreg;
            art.logreg = baselines::logreg_train(lr_train_x, train_w.labels, lr_val_x,
                                                 val_w.labels, cfg.logreg_rho_grid, lr_opts);

            const targets::BinningModel poisson_binning =
                target == core::TargetKind::DFE ? identity_binning() : *art.binning;

            const std::array<std::pair<std::string, const features::WindowTensor*>, 2> splits = {
                {{"validation", &val_w}, {"test", &test_w}}};
            for (const auto& [split_name, w] : splits) {
                // GRU
                auto forecast = nn::predict(result.best_model, *w);
                std::vector<std::vector<double>> probs;
                for (const auto& p : forecast.probabilities)
                    probs.emplace_back(p.begin(), p.end());
                art.evaluations[split_name]["gru"] = evaluate_model(
                    target, split_name, "gru", *w, forecast.predicted_class, std::move(probs));
                // Persistence
                art.evaluations[split_name]["persistence"] = evaluate_model(
                    target, split_name, "persistence", *w,
                    persistence_for_windows(*w, labels, target, horizon));
                // Week mode
                std::vector<int> wm;
                for (std::size_t i = 0; i < w->n_windows; ++i)
                    wm.push_back(baselines::week_mode_predict(art.week_mode, w->window_zone[i],
                                                              w->label_date[i]));
                art.evaluations[split_name]["week_mode"] =
                    evaluate_model(target, split_name, "week_mode", *w, std::move(wm));
                // Poisson
                std::vector<int> po;
                for (std::size_t i = 0; i < w->n_windows; ++i)
                    po.push_back(
                        baselines::poisson_predict(art.poisson, w->window_zone[i], poisson_binning));
                art.evaluations[split_name]["poisson"] =
                    evaluate_model(target, split_name, "poisson", *w, std::move(po));
                // Logistic regression
                const Eigen::MatrixXd x = baselines::last_day_features(*w);
                Eigen::MatrixXd lr_probs = baselines::logreg_probabilities(art.logreg, x);
                std::vector<std::vector<double>> lrp;
                for (Eigen::Index r = 0; r < lr_probs.rows(); ++r) {
                    std::vector<double> row(lr_probs.cols());
                    for (Eigen::Index c = 0; c < lr_probs.cols(); ++c) row[c] = lr_probs(r, c);
                    lrp.push_back(std::move(row));
                }
                art.evaluations[split_name]["logreg"] =
                    evaluate_model(target, split_name, "logreg", *w,
                                   baselines::logreg_predict(art.logreg, x), std::move(lrp));
            }
            manifest.artifacts.push_back(std::move(art));
        }
    }

    write_file((std::filesystem::path(request.out_dir) / "manifest.json").string(),
               manifest_to_json(manifest));
    return manifest;
}

std::string cmd_evaluate(const ExperimentManifest& manifest, const std::string& split) {
    if (split != "validation" && split != "test")
        throw ConfigError("split", "unknown split '" + split + "' (expected validation or test)");
    for (const auto& art : manifest.artifacts)
        if (!std::filesystem::exists(art.checkpoint_path))
            throw std::runtime_error("missing checkpoint file: " + art.checkpoint_path);

    std::ostringstream out;
    out << "ordinal IoU on split '" << split << "'\n";
    const auto models = model_names();
    out << "target            ";
    for (const auto& m : models) {
        char cell[32];
        std::snprintf(cell, sizeof(cell), "%12s", m.c_str());
        out << cell;
    }
    out << '\n';
    for (const auto& art : manifest.artifacts) {
        const auto split_it = art.evaluations.find(split);
        if (split_it == art.evaluations.end())
            throw core::ValidationError("split", "manifest has no evaluations for split " + split);
        char name[64];
        std::snprintf(name, sizeof(name), "%-13s h=%-2d ", core::target_name(art.target).c_str(),
                      art.horizon);
        out << name;
        for (const auto& model : models) {
            const auto it = split_it->second.find(model);
            if (it == split_it->second.end())
                throw core::ValidationError("model", "manifest lacks model " + model);
            // Recompute from the persisted per-day predictions and cross-check.
            std::vector<int> truth, predicted;
            for (const auto& p : it->second.predictions) {
                truth.push_back(p.truth);
                predicted.push_back(p.predicted);
            }
            const double recomputed = metrics::ordinal_iou(truth, predicted);
            if (std::abs(recomputed - it->second.report.iou) > 1e-12)
                throw std::runtime_error("stored IoU for " + model + "/" +
                                         core::target_name(art.target) +
                                         " disagrees with its persisted predictions");
            char cell[32];
            std::snprintf(cell, sizeof(cell), "%12.3f", recomputed);
            out << cell;
        }
        out << '\n';
    }
    return out.str();
}

reportgen::OperationalReport cmd_report(const ExperimentManifest& manifest, core::ZoneId zone,
                                        const core::Date& date,
                                        const reportgen::BackendConfig& backend,
                                        const std::vector<std::string>& context_notes) {
    const int horizon = manifest.config.horizons.front();

    // Collect the stored test-split GRU forecasts for (zone, date).
    reportgen::ForecastSlice forecasts;
    std::array<std::optional<int>, 4> per_target_class;
    const TargetArtifacts* dfe_art = nullptr;
    for (const auto& art : manifest.artifacts) {
        if (art.horizon != horizon) continue;
        if (art.target == core::TargetKind::DFE) dfe_art = &art;
        const auto split_it = art.evaluations.find("test");
        if (split_it == art.evaluations.end()) continue;
        const auto model_it = split_it->second.find("gru");
        if (model_it == split_it->second.end()) continue;
        for (const auto& p : model_it->second.predictions) {
            if (p.zone != zone || p.date != date) continue;
            std::array<double, core::num_risk_classes> probs{};
            for (std::size_t i = 0; i < probs.size() && i < p.probabilities.size(); ++i)
                probs[i] = p.probabilities[i];
            forecasts[art.target] = probs;
            per_target_class[static_cast<std::size_t>(art.target)] = p.predicted;
        }
    }
    if (forecasts.empty())
        throw core::ValidationError("date", "no test-split forecast for zone " +
                                                std::to_string(zone.code) + " on " +
                                                core::to_iso_string(date) +
                                                " (date outside the test split?)");

    const auto& ropts = manifest.config.report;
    std::vector<reportgen::AgentFinding> findings;
    findings.push_back(reportgen::hazard_agent(forecasts, zone, date, ropts.confidence));
    const auto& hazard = findings.front();

    // Deviation agent needs the recently observed classes: rebuild labels
    // from the referenced dataset (digest-checked).
    const std::string csv = read_file(manifest.dataset_path);
    if (digest_hex(csv) != manifest.dataset_digest)
        throw core::ValidationError("dataset", "dataset file no longer matches the manifest digest");
    const auto dataset = dataset_from_csv(csv);
    std::map<core::TargetKind, targets::BinningModel> binning;
    for (const auto& art : manifest.artifacts)
        if (art.binning) binning[art.target] = *art.binning;
    if (binning.size() == 3) {
        const auto labels =
            targets::build_labels(dataset, binning.at(core::TargetKind::NumFires),
                                  binning.at(core::TargetKind::InterventionTime),
                                  binning.at(core::TargetKind::Resources));
        for (const auto& [target, probs] : forecasts) {
            std::vector<int> window;
            for (int back = ropts.observation_window_days; back >= 1; --back) {
                const auto past = core::from_civil_days(core::to_civil_days(date) - back);
                const auto it = labels.labels.find({zone, past});
                if (it != labels.labels.end())
                    window.push_back(it->second[static_cast<std::size_t>(target)].level);
            }
            if (window.empty()) continue;
            const int predicted = *per_target_class[static_cast<std::size_t>(target)];
            findings.push_back(
                reportgen::deviation_agent(target, predicted, probs, window, zone, date));
        }
    }

    // Importance agent: permutation importance of the stored DFE checkpoint
    // over this zone's test windows.
    if (dfe_art != nullptr && forecasts.contains(core::TargetKind::DFE)) {
        auto model = nn::checkpoint_from_json(read_file(dfe_art->checkpoint_path));
        const auto all_labels =
            binning.size() == 3
                ? targets::build_labels(dataset, binning.at(core::TargetKind::NumFires),
                                        binning.at(core::TargetKind::InterventionTime),
                                        binning.at(core::TargetKind::Resources))
                : targets::LabelTable{};
        if (!all_labels.labels.empty()) {
            const auto full = features::assemble_features(dataset, all_labels);
            const auto filtered = full.select_columns(manifest.kept_columns);
            const auto standardized =
                features::apply_standardization(filtered, manifest.standardization);
            const auto test_rows = rows_for_years(standardized, manifest.config.split.test,
                                                  manifest.config.split.test);
            auto test_matrix = standardized.select_rows(test_rows);
            const auto windows = features::make_windows(
                test_matrix, all_labels, manifest.config.gru.seq_len, horizon,
                core::TargetKind::DFE);
            metrics::ImportanceInput input;
            for (std::size_t w = 0; w < windows.n_windows; ++w) {
                if (windows.window_zone[w] != zone) continue;
                std::vector<std::vector<double>> channels;
                for (std::size_t c = 0; c < windows.n_channels; ++c) {
                    std::vector<double> series(windows.seq_len);
                    for (std::size_t t = 0; t < windows.seq_len; ++t)
                        series[t] = windows.at(w, c, t);
                    channels.push_back(std::move(series));
                }
                input.windows.push_back(std::move(channels));
                input.labels.push_back(windows.labels[w]);
            }
            input.channel_names = windows.channel_names;
            if (!input.windows.empty()) {
                auto predict = [&](const std::vector<std::vector<std::vector<double>>>& b) {
                    features::WindowTensor wt;
                    wt.n_windows = b.size();
                    wt.n_channels = windows.n_channels;
                    wt.seq_len = windows.seq_len;
                    wt.channel_names = windows.channel_names;
                    wt.labels.assign(b.size(), 0);
                    wt.window_zone.assign(b.size(), zone);
                    wt.label_date.assign(b.size(), date);
                    wt.data.reserve(b.size() * wt.n_channels * wt.seq_len);
                    for (const auto& w : b)
                        for (const auto& c : w)
                            wt.data.insert(wt.data.end(), c.begin(), c.end());
                    return nn::predict(model, wt).predicted_class;
                };
                const auto importances = metrics::permutation_importance(
                    predict, input, rng::derive_seed(manifest.config.train.seed, "importance"),
                    ropts.importance_repeats);
                findings.push_back(
                    reportgen::importance_agent(importances, hazard, ropts.importance_top_k));
            }
        }
    }

    reportgen::ReportContext context;
    context.zone = zone;
    context.date = date;
    context.per_target_class = per_target_class;
    context.notes = context_notes;
    return reportgen::synthesize_report(findings, context, backend);
}

}  // namespace wildfire::pipeline
