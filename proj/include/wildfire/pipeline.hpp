#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wildfire/baselines.hpp"
#include "wildfire/core.hpp"
#include "wildfire/features.hpp"
#include "wildfire/metrics.hpp"
#include "wildfire/nn.hpp"
#include "wildfire/reportgen.hpp"
#include "wildfire/synthgen.hpp"
#include "wildfire/targets.hpp"

namespace wildfire::pipeline {

inline constexpr const char* tool_version = "1.0.0";

/// Configuration-file problems, mapped to exit code 2 by the CLI
/// (data validation problems map to 3, everything else to 4).
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

struct SplitYears {
    int train_last = 2021;
    int validation = 2022;
    int test = 2023;
};

struct FeatureOptions {
    double variance_threshold = 1e-8;
    double correlation_threshold = 0.95;
};

struct ScanOptions {
    std::vector<double> rates;  // defaults to 0.05 .. 1.0 step 0.05
    int max_epochs = 40;        // reduced-budget training inside the scan
};

struct ReportOptions {
    reportgen::ConfidenceThresholds confidence;
    int observation_window_days = 7;
    int importance_repeats = 2;
    int importance_top_k = 5;
};

/// Whole-experiment configuration. Defaults match the documented
/// hyperparameters; the JSON config file mirrors this structure section by
/// section and only needs to state overrides.
struct PipelineConfig {
    synthgen::GeneratorConfig generator;
    SplitYears split;
    FeatureOptions features;
    nn::GruConfig gru;
    nn::TrainConfig train;
    ScanOptions scan;
    baselines::LogRegOptions logreg;
    std::vector<double> logreg_rho_grid;  // defaults to {0.3, 0.5, 0.7, 1.0}
    ReportOptions report;
    std::vector<int> horizons = {1};

    PipelineConfig();
};

PipelineConfig default_pipeline_config();

/// Parses the JSON config document; unknown keys and malformed values raise
/// ConfigError naming the offending field. Missing sections keep defaults.
PipelineConfig config_from_json(const std::string& json_text);
PipelineConfig load_config(const std::string& path);
std::string config_to_json(const PipelineConfig& config);

/// Dataset CSV round-trip. Schema (header row, comma-separated):
/// zone,date,temp12,temp16,dewpoint,rh,wind_speed,wind_dir,precip24,snow,
/// dfe,n_fires,intervention_minutes,engines
std::string dataset_to_csv(std::span<const core::DailyZoneRecord> records);
std::vector<core::DailyZoneRecord> dataset_from_csv(const std::string& csv_text);
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

/// FNV-1a 64-bit digest of a byte string, as 16 hex characters.
std::string digest_hex(const std::string& bytes);

/// Per-day prediction rows persisted so evaluation can be recomputed from the
/// manifest alone.
struct PredictionRecord {
    core::ZoneId zone;
    core::Date date;
    int truth = 0;
    int predicted = 0;
    std::vector<double> probabilities;  // present for probabilistic models
};

struct ModelEvaluation {
    metrics::EvaluationReport report;
    std::vector<PredictionRecord> predictions;
};

/// Everything trained for one (target, horizon) cell.
struct TargetArtifacts {
    core::TargetKind target = core::TargetKind::DFE;
    int horizon = 1;
    std::optional<targets::BinningModel> binning;  // absent for DFE
    features::SamplingPlan sampling;
    std::string checkpoint_path;
    std::string checkpoint_digest;
    baselines::LogRegModel logreg;
    baselines::WeekModeTable week_mode;
    baselines::PoissonRates poisson;
    std::map<std::string, std::map<std::string, ModelEvaluation>> evaluations;  // split -> model
};

struct ExperimentManifest {
    std::string version = tool_version;
    PipelineConfig config;
    std::string dataset_path;
    std::string dataset_digest;
    std::vector<std::string> kept_columns;
    features::Standardization standardization;
    std::vector<TargetArtifacts> artifacts;
};

std::string manifest_to_json(const ExperimentManifest& manifest);
ExperimentManifest manifest_from_json(const std::string& json_text);

/// Picks the undersampling rate maximizing validation ordinal IoU (ties to
/// the smaller rate). The trainer maps (rate, seed) to a validation IoU; the
/// selected (rate, seed) pair is shared across every configured horizon.
template <typename Trainer>
features::SamplingPlan select_sampling_rate(std::span<const double> rates, std::uint64_t seed,
                                            Trainer&& trainer) {
    if (rates.empty()) throw ConfigError("scan.rates", "empty undersampling grid");
    features::SamplingPlan best;
    bool first = true;
    for (double rate : rates) {
        const double iou = trainer(rate, seed);
        if (first || iou > best.selected_by) {
            best.rate = rate;
            best.seed = seed;
            best.selected_by = iou;
            first = false;
        }
    }
    return best;
}

/// Model names in the fixed evaluation-table order.
std::vector<std::string> model_names();

struct TrainRequest {
    std::string dataset_path;
    std::string out_dir;
    std::vector<core::TargetKind> targets;  // empty -> all four
    std::optional<int> horizon_override;
    std::optional<std::uint64_t> seed_override;
};

/// synth: writes the dataset CSV and returns a short human summary.
std::string cmd_synth(const PipelineConfig& config, const std::string& out_path);

/// train: full pipeline for every requested target; writes checkpoints and
/// `manifest.json` under out_dir and returns the manifest.
ExperimentManifest cmd_train(const PipelineConfig& config, const TrainRequest& request);

/// evaluate: recomputes metrics from the persisted per-day predictions,
/// cross-checks them against the stored reports, and renders the model x
/// target table for one split ("validation" or "test").
std::string cmd_evaluate(const ExperimentManifest& manifest, const std::string& split);

/// report: runs the three agents on the stored test forecasts for
/// (zone, date) and synthesizes the operational report.
reportgen::OperationalReport cmd_report(const ExperimentManifest& manifest, core::ZoneId zone,
                                        const core::Date& date,
                                        const reportgen::BackendConfig& backend,
                                        const std::vector<std::string>& context_notes = {});

}  // namespace wildfire::pipeline
