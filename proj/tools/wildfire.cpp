#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "wildfire/pipeline.hpp"

namespace {

using wildfire::pipeline::ConfigError;

wildfire::pipeline::PipelineConfig resolve_config(const std::string& config_path,
                                                  std::uint64_t seed, bool seed_set) {
    auto config = config_path.empty() ? wildfire::pipeline::default_pipeline_config()
                                      : wildfire::pipeline::load_config(config_path);
    if (seed_set) {
        config.generator.seed = seed;
        config.train.seed = seed;
        config.logreg.seed = seed;
    }
    return config;
}

std::vector<wildfire::core::TargetKind> parse_targets(const std::string& csv) {
    std::vector<wildfire::core::TargetKind> out;
    std::string token;
    std::istringstream in(csv);
    while (std::getline(in, token, ',')) {
        if (token.empty()) continue;
        try {
            out.push_back(wildfire::core::target_from_name(token));
        } catch (const wildfire::core::ValidationError&) {
            throw ConfigError("targets", "unknown target '" + token +
                                             "' (expected dfe, num_fires, intervention_time, "
                                             "resources)");
        }
    }
    return out;
}

int run(int argc, char** argv) {
    CLI::App app{"wildfire-risk forecasting toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    app.add_option("--config", config_path, "JSON configuration file");
    auto* seed_opt = app.add_option("--seed", seed, "root seed overriding the config");

    // synth
    auto* synth = app.add_subcommand("synth", "generate the synthetic dataset CSV");
    std::string synth_out = "dataset.csv";
    synth->add_option("--out", synth_out, "output CSV path");

    // train
    auto* train = app.add_subcommand("train", "train the GRU and all baselines");
    std::string train_dataset;
    std::string train_out = "experiment";
    std::string train_targets;
    int horizon = 0;
    train->add_option("dataset", train_dataset, "dataset CSV produced by synth")->required();
    train->add_option("--out", train_out, "output directory for checkpoints and manifest");
    train->add_option("--targets", train_targets, "comma-separated target subset");
    auto* horizon_opt = train->add_option("--horizon", horizon, "single forecast horizon override");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "render the model x target IoU table");
    std::string eval_manifest;
    std::string split = "test";
    evaluate->add_option("manifest", eval_manifest, "manifest.json from train")->required();
    evaluate->add_option("--split", split, "validation or test");

    // report
    auto* report = app.add_subcommand("report", "synthesize one operational report");
    std::string report_manifest;
    int zone_code = 0;
    std::string date_str;
    std::string backend_name = "template";
    std::string report_out;
    std::vector<std::string> notes;
    report->add_option("manifest", report_manifest, "manifest.json from train")->required();
    report->add_option("--zone", zone_code, "zone code")->required();
    report->add_option("--date", date_str, "ISO date inside the test split")->required();
    report->add_option("--backend", backend_name, "template or external");
    report->add_option("--out", report_out, "output directory for the report files");
    report->add_option("--note", notes, "free-form context note (repeatable)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    seed_set = seed_opt->count() > 0;

    if (synth->parsed()) {
        const auto config = resolve_config(config_path, seed, seed_set);
        std::cout << wildfire::pipeline::cmd_synth(config, synth_out) << "\n";
        return 0;
    }
    if (train->parsed()) {
        const auto config = resolve_config(config_path, seed, seed_set);
        wildfire::pipeline::TrainRequest request;
        request.dataset_path = train_dataset;
        request.out_dir = train_out;
        request.targets = parse_targets(train_targets);
        if (horizon_opt->count() > 0) request.horizon_override = horizon;
        if (seed_set) request.seed_override = seed;
        const auto manifest = wildfire::pipeline::cmd_train(config, request);
        std::cout << "trained " << manifest.artifacts.size() << " target model(s); manifest at "
                  << train_out << "/manifest.json\n";
        return 0;
    }
    if (evaluate->parsed()) {
        const auto manifest =
            wildfire::pipeline::manifest_from_json(wildfire::pipeline::read_file(eval_manifest));
        std::cout << wildfire::pipeline::cmd_evaluate(manifest, split);
        return 0;
    }
    if (report->parsed()) {
        const auto manifest =
            wildfire::pipeline::manifest_from_json(wildfire::pipeline::read_file(report_manifest));
        wildfire::reportgen::BackendConfig backend;
        if (backend_name == "template") {
            backend.kind = wildfire::reportgen::BackendConfig::Kind::Template;
        } else if (backend_name == "external") {
            backend.kind = wildfire::reportgen::BackendConfig::Kind::External;
            const char* endpoint = std::getenv("WILDFIRE_BACKEND_ENDPOINT");
            if (endpoint == nullptr || std::string(endpoint).empty())
                throw ConfigError("WILDFIRE_BACKEND_ENDPOINT",
                                  "--backend external requires the WILDFIRE_BACKEND_ENDPOINT "
                                  "environment variable");
            backend.endpoint = endpoint;
            if (const char* token = std::getenv("WILDFIRE_BACKEND_TOKEN")) backend.token = token;
        } else {
            throw ConfigError("backend", "unknown backend '" + backend_name + "'");
        }
        const auto date = wildfire::core::date_from_iso_string(date_str);
        const auto result = wildfire::pipeline::cmd_report(
            manifest, wildfire::core::ZoneId{zone_code}, date, backend, notes);
        const std::string text = wildfire::reportgen::render_text(result);
        std::cout << text;
        if (!report_out.empty()) {
            const std::string stem = "report_" + std::to_string(zone_code) + "_" + date_str;
            wildfire::pipeline::write_file(report_out + "/" + stem + ".json",
                                           wildfire::reportgen::report_to_json(result));
            wildfire::pipeline::write_file(report_out + "/" + stem + ".txt", text);
        }
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "configuration error [" << e.field() << "]: " << e.what() << "\n";
        return 2;
    } catch (const wildfire::core::ValidationError& e) {
        std::cerr << "data validation error [" << e.field() << "]: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "runtime failure: " << e.what() << "\n";
        return 4;
    }
}
