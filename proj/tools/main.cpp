// rfvar command-line tool: train forests, predict with variance estimates,
// generate simulation data, run the bias experiment grid, and project its
// results into figure-data CSVs. Every run writes a manifest with the
// resolved configuration and sha256 digests of its outputs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rfvar/rfvar.hpp"

namespace {

using nlohmann::json;

unsigned default_threads() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::stringstream ss(text);
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

json forest_config_json(const rfvar::ForestConfig& config) {
    return json{{"tree_type", rfvar::to_string(config.tree_type)},
                {"resample", rfvar::to_string(config.resample)},
                {"tree_count", config.tree_count},
                {"subsample_size", config.subsample_size},
                {"mtry", config.mtry},
                {"min_node_size", config.min_node_size},
                {"alpha", config.alpha},
                {"seed", config.seed}};
}

struct TrainArgs {
    std::string data_path;
    std::string response = "y";
    std::string tree_type = "cart";
    std::string resample = "bootstrap";
    std::size_t mtry = 0;
    std::size_t tree_count = 0;
    std::size_t subsample_size = 0;
    std::size_t min_node_size = 5;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    std::string out = "forest.rfvm";
    unsigned threads = default_threads();
};

int cmd_train(const TrainArgs& args) {
    const rfvar::Dataset data = rfvar::load_csv(args.data_path, args.response);

    rfvar::ForestConfig config;
    config.tree_type = rfvar::parse_tree_type(args.tree_type);
    config.resample = rfvar::parse_resample_mode(args.resample);
    config.tree_count = args.tree_count;
    config.subsample_size = args.subsample_size;
    config.mtry = args.mtry;
    config.min_node_size = args.min_node_size;
    config.alpha = args.alpha;
    config.seed = args.seed;

    const rfvar::ForestModel model = rfvar::fit_forest(data, config, args.threads);
    rfvar::save_forest(model, args.out);

    json resolved = forest_config_json(model.config);
    resolved["data"] = args.data_path;
    resolved["response"] = args.response;
    resolved["n"] = model.n;
    resolved["p"] = model.p;
    rfvar::RunManifest manifest("train", resolved, model.config.seed);
    manifest.add_output(args.out);
    manifest.write(args.out + ".manifest.json");

    std::cout << "trained " << model.tree_count() << " " << rfvar::to_string(model.config.tree_type)
              << " trees (" << rfvar::to_string(model.config.resample) << ", n=" << model.n
              << ", p=" << model.p << ") -> " << args.out << "\n";
    return 0;
}

struct PredictArgs {
    std::string model_path;
    std::string data_path;
    std::string bias_correction;  // empty = mode default
    bool floor_variance = false;
    std::string out = "predictions.csv";
    unsigned threads = default_threads();
};

int cmd_predict(const PredictArgs& args) {
    const rfvar::ForestModel model = rfvar::load_forest(args.model_path);
    const rfvar::CsvTable table = rfvar::load_csv_table(args.data_path);

    // Select the model's feature columns by name; extra columns (for example
    // a response carried along in a simulated file) are ignored.
    std::vector<std::vector<double>> rows(table.rows, std::vector<double>(model.p));
    for (std::size_t j = 0; j < model.p; ++j) {
        const auto& wanted = model.column_names[j];
        std::size_t index = table.names.size();
        for (std::size_t t = 0; t < table.names.size(); ++t) {
            if (table.names[t] == wanted) {
                index = t;
                break;
            }
        }
        if (index == table.names.size()) {
            throw rfvar::ValidationError("input " + args.data_path + " is missing model column '" +
                                         wanted + "'");
        }
        for (std::size_t i = 0; i < table.rows; ++i) {
            rows[i][j] = table.columns[index][i];
        }
    }

    const rfvar::BiasCorrection bc = args.bias_correction.empty()
                                         ? rfvar::BiasCorrection::mode_default
                                         : rfvar::parse_bias_correction(args.bias_correction);
    const auto results = rfvar::predict_with_variance(model, rows, bc, args.threads);

    std::ofstream out(args.out, std::ios::trunc);
    if (!out) {
        throw rfvar::IoError("cannot open for writing: " + args.out);
    }
    out << "row,prediction,variance_raw,variance_correction,variance_corrected\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const double corrected = args.floor_variance
                                     ? std::max(0.0, results[i].variance.corrected)
                                     : results[i].variance.corrected;
        out << i << ',' << rfvar::format_double(results[i].prediction) << ','
            << rfvar::format_double(results[i].variance.raw) << ','
            << rfvar::format_double(results[i].variance.correction) << ','
            << rfvar::format_double(corrected) << '\n';
    }
    out.flush();
    if (!out) {
        throw rfvar::IoError("write failed: " + args.out);
    }

    json resolved = forest_config_json(model.config);
    resolved["model"] = args.model_path;
    resolved["data"] = args.data_path;
    resolved["bias_correction"] =
        rfvar::to_string(bc == rfvar::BiasCorrection::mode_default
                             ? (model.config.resample == rfvar::ResampleMode::bootstrap
                                    ? rfvar::BiasCorrection::bootstrap
                                    : rfvar::BiasCorrection::eq5)
                             : bc);
    resolved["floor_variance"] = args.floor_variance;
    resolved["rows"] = results.size();
    rfvar::RunManifest manifest("predict", resolved, model.config.seed);
    manifest.add_output(args.out);
    manifest.write(args.out + ".manifest.json");

    std::cout << "wrote " << results.size() << " predictions -> " << args.out << "\n";
    return 0;
}

struct SimulateArgs {
    std::string spec;
    std::size_t n = 0;
    std::uint64_t seed = 1;
    std::string out;
};

int cmd_simulate(const SimulateArgs& args) {
    rfvar::SimulationSpec spec;
    spec.name = rfvar::parse_sim_function(args.spec);
    spec.n = args.n;
    spec.seed = args.seed;
    const rfvar::Dataset data = rfvar::gen_dataset(spec);
    rfvar::save_csv(data, args.out);

    json resolved{{"spec", args.spec}, {"n", args.n}, {"seed", args.seed}};
    rfvar::RunManifest manifest("simulate", resolved, args.seed);
    manifest.add_output(args.out);
    manifest.write(args.out + ".manifest.json");

    std::cout << "wrote " << data.n() << " rows of " << args.spec << " -> " << args.out << "\n";
    return 0;
}

struct ExperimentArgs {
    std::string preset;
    std::string specs;
    std::string n_values;
    std::string mtry_levels;
    std::string tree_types;
    std::string resamples;
    std::size_t replicates = 0;
    std::size_t test_points = 0;
    std::uint64_t master_seed = 0;
    bool master_seed_set = false;
    std::size_t b_override = 0;
    std::size_t s_override = 0;
    std::string out = "experiment_out";
    std::string resume;
    unsigned threads = default_threads();
};

rfvar::ExperimentConfig build_experiment_config(const ExperimentArgs& args) {
    rfvar::ExperimentConfig config;
    bool have_base = false;
    if (!args.preset.empty()) {
        if (args.preset == "desk") {
            config = rfvar::desk_preset();
        } else if (args.preset == "paper") {
            config = rfvar::paper_preset();
        } else {
            throw rfvar::ValidationError("unknown preset '" + args.preset +
                                         "' (valid: desk, paper)");
        }
        have_base = true;
    }
    bool have_factors = false;
    if (!args.specs.empty()) {
        config.specs.clear();
        if (args.specs == "all") {
            config.specs.assign(rfvar::kAllSimFunctions.begin(), rfvar::kAllSimFunctions.end());
        } else {
            for (const auto& name : split_list(args.specs)) {
                config.specs.push_back(rfvar::parse_sim_function(name));
            }
        }
        have_factors = true;
    }
    if (!args.n_values.empty()) {
        config.n_values.clear();
        for (const auto& item : split_list(args.n_values)) {
            config.n_values.push_back(std::stoull(item));
        }
        have_factors = true;
    }
    if (!args.mtry_levels.empty()) {
        config.mtry_levels.clear();
        for (const auto& item : split_list(args.mtry_levels)) {
            config.mtry_levels.push_back(std::stoi(item));
        }
        have_factors = true;
    }
    if (!args.tree_types.empty()) {
        config.tree_types.clear();
        for (const auto& item : split_list(args.tree_types)) {
            config.tree_types.push_back(rfvar::parse_tree_type(item));
        }
        have_factors = true;
    }
    if (!args.resamples.empty()) {
        config.resample_modes.clear();
        for (const auto& item : split_list(args.resamples)) {
            config.resample_modes.push_back(rfvar::parse_resample_mode(item));
        }
        have_factors = true;
    }
    if (!have_base && !have_factors) {
        throw rfvar::ValidationError(
            "experiment needs --preset {desk|paper} or explicit factor flags");
    }
    if (!have_base) {
        // Factor flags without a preset start from the desk replication scale.
        const auto desk = rfvar::desk_preset();
        if (config.specs.empty()) config.specs = desk.specs;
        if (config.n_values.empty()) config.n_values = desk.n_values;
        if (config.mtry_levels.empty()) config.mtry_levels = desk.mtry_levels;
        if (config.tree_types.empty()) config.tree_types = desk.tree_types;
        if (config.resample_modes.empty()) config.resample_modes = desk.resample_modes;
        config.replicates = desk.replicates;
        config.test_points = desk.test_points;
        config.master_seed = desk.master_seed;
    }
    if (args.replicates != 0) {
        config.replicates = args.replicates;
    }
    if (args.test_points != 0) {
        config.test_points = args.test_points;
    }
    if (args.master_seed_set) {
        config.master_seed = args.master_seed;
    }
    config.tree_count_override = args.b_override;
    config.subsample_size_override = args.s_override;
    rfvar::validate(config);
    return config;
}

int cmd_experiment(const ExperimentArgs& args) {
    const rfvar::ExperimentConfig config = build_experiment_config(args);

    rfvar::ExperimentOptions options;
    options.out_dir = args.out;
    options.resume_from = args.resume;
    options.threads = args.threads;
    options.log = &std::cerr;

    const rfvar::ExperimentResult result = rfvar::run_experiment(config, options);

    json resolved = rfvar::detail::config_to_json(config);
    resolved["out_dir"] = args.out;
    resolved["threads"] = args.threads;
    rfvar::RunManifest manifest("experiment", resolved, config.master_seed);
    manifest.add_field("results_semantic_digest", rfvar::semantic_digest(result));
    manifest.add_field("checkpoint", (std::filesystem::path(args.out) / "checkpoint.json").string());
    manifest.add_output((std::filesystem::path(args.out) / "results.csv").string());
    for (const auto& cell : result.cells) {
        manifest.add_output(
            (std::filesystem::path(args.out) / ("detail_" + rfvar::cell_id(cell) + ".csv"))
                .string());
    }
    manifest.write((std::filesystem::path(args.out) / "manifest.json").string());

    std::cout << "completed " << result.cells.size() << " cells -> " << args.out
              << "/results.csv\n";
    return 0;
}

struct ReportArgs {
    std::string results;
    std::string out;
};

int cmd_report(const ReportArgs& args) {
    const auto written = rfvar::write_figure_csvs(args.results, args.out);

    json resolved{{"results", args.results}, {"out_dir", args.out}};
    rfvar::RunManifest manifest("report", resolved, 0);
    for (const auto& path : written) {
        manifest.add_output(path);
    }
    manifest.write((std::filesystem::path(args.out) / "manifest.json").string());

    std::cout << "wrote " << written.size() << " figure CSVs -> " << args.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"random forest regression with infinitesimal-jackknife prediction variances"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(rfvar::kVersion));

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "fit a forest on a CSV dataset");
    train_cmd->add_option("--data", train.data_path, "training CSV (header row, numeric cells)")
        ->required();
    train_cmd->add_option("--response", train.response, "response column name (default y)");
    train_cmd->add_option("--tree-type", train.tree_type, "base learner: cart or ci")
        ->check(CLI::IsMember({"cart", "ci"}));
    train_cmd->add_option("--resample", train.resample, "resampling: bootstrap or subsample")
        ->check(CLI::IsMember({"bootstrap", "subsample"}));
    train_cmd->add_option("--mtry", train.mtry, "variables tried per split (default max(p/3,1))");
    train_cmd->add_option("--b", train.tree_count, "number of trees (default 5n)");
    train_cmd->add_option("--s", train.subsample_size, "subsample size (default round(n^0.7))")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--min-node-size", train.min_node_size,
                          "stop splitting below twice this weighted count (default 5)")
        ->check(CLI::PositiveNumber);
    train_cmd->add_option("--alpha", train.alpha, "ci selection level in (0,1) (default 0.05)");
    train_cmd->add_option("--seed", train.seed, "rng seed (default 1)");
    train_cmd->add_option("--out", train.out, "model file to write (default forest.rfvm)");
    train_cmd->add_option("--threads", train.threads, "worker threads (default all cores)");

    PredictArgs predict;
    auto* predict_cmd =
        app.add_subcommand("predict", "predictions plus variance estimates for a CSV");
    predict_cmd->add_option("--model", predict.model_path, "trained model file")->required();
    predict_cmd->add_option("--data", predict.data_path, "input CSV with the model's columns")
        ->required();
    predict_cmd
        ->add_option("--bias-correction", predict.bias_correction,
                     "override the Monte Carlo correction: eq5, bootstrap or none")
        ->check(CLI::IsMember({"eq5", "bootstrap", "none"}));
    predict_cmd->add_flag("--floor-variance", predict.floor_variance,
                          "clamp negative corrected variances to 0 in the output");
    predict_cmd->add_option("--out", predict.out, "output CSV (default predictions.csv)");
    predict_cmd->add_option("--threads", predict.threads, "worker threads");

    SimulateArgs simulate;
    auto* simulate_cmd = app.add_subcommand("simulate", "generate a synthetic dataset CSV");
    simulate_cmd->add_option("--spec", simulate.spec, "distribution name, e.g. SUM1")->required();
    simulate_cmd->add_option("--n", simulate.n, "rows to generate")->required();
    simulate_cmd->add_option("--seed", simulate.seed, "rng seed (default 1)");
    simulate_cmd->add_option("--out", simulate.out, "output CSV path")->required();

    ExperimentArgs experiment;
    auto* experiment_cmd =
        app.add_subcommand("experiment", "run the variance-bias simulation grid");
    experiment_cmd->add_option("--preset", experiment.preset,
                               "desk (R=K=25, n=200) or paper (R=K=100, n=200,1000,5000)");
    experiment_cmd->add_option("--specs", experiment.specs,
                               "comma-separated distribution names, or 'all'");
    experiment_cmd->add_option("--n-values", experiment.n_values, "comma-separated sample sizes");
    experiment_cmd->add_option("--mtry-levels", experiment.mtry_levels,
                               "comma-separated levels from {1,2,3}");
    experiment_cmd->add_option("--tree-types", experiment.tree_types,
                               "comma-separated from {cart,ci}");
    experiment_cmd->add_option("--resamples", experiment.resamples,
                               "comma-separated from {bootstrap,subsample}");
    experiment_cmd->add_option("--replicates", experiment.replicates, "training sets per cell");
    experiment_cmd->add_option("--test-points", experiment.test_points,
                               "prediction points per distribution");
    experiment_cmd->add_option("--master-seed", experiment.master_seed, "master rng seed")
        ->each([&experiment](const std::string&) { experiment.master_seed_set = true; });
    experiment_cmd->add_option("--b-override", experiment.b_override,
                               "fixed tree count instead of 5n");
    experiment_cmd->add_option("--s-override", experiment.s_override,
                               "fixed subsample size instead of round(n^0.7)");
    experiment_cmd->add_option("--out", experiment.out, "output directory");
    experiment_cmd->add_option("--resume", experiment.resume,
                               "checkpoint file to resume from")
        ->check(CLI::ExistingFile);
    experiment_cmd->add_option("--threads", experiment.threads, "worker threads");

    ReportArgs report;
    auto* report_cmd =
        app.add_subcommand("report", "project results.csv into per-sample-size figure CSVs");
    report_cmd->add_option("--results", report.results, "results.csv from an experiment run")
        ->required();
    report_cmd->add_option("--out", report.out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.get_name() << ": " << e.what() << "\n";
        return 1;
    }

    try {
        if (train_cmd->parsed()) {
            return cmd_train(train);
        }
        if (predict_cmd->parsed()) {
            return cmd_predict(predict);
        }
        if (simulate_cmd->parsed()) {
            return cmd_simulate(simulate);
        }
        if (experiment_cmd->parsed()) {
            return cmd_experiment(experiment);
        }
        if (report_cmd->parsed()) {
            return cmd_report(report);
        }
    } catch (const rfvar::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "failure: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
