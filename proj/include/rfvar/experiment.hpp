#ifndef RFVAR_EXPERIMENT_HPP
#define RFVAR_EXPERIMENT_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfvar/common.hpp"
#include "rfvar/dataset.hpp"
#include "rfvar/digest.hpp"
#include "rfvar/forest.hpp"
#include "rfvar/ij_variance.hpp"
#include "rfvar/simgen.hpp"

namespace rfvar {

/// Factor grid for the simulation study: every (spec, n, mtry level,
/// tree type, resample mode) combination becomes one cell. Overrides of 0
/// mean "use the size defaults" (B = 5n, s = round(n^0.7)).
struct ExperimentConfig {
    std::vector<SimFunction> specs;
    std::vector<std::size_t> n_values;
    std::vector<int> mtry_levels;
    std::vector<TreeType> tree_types;
    std::vector<ResampleMode> resample_modes;
    std::size_t replicates = 25;   // R: independent training sets per cell
    std::size_t test_points = 25;  // K: prediction points per distribution
    std::uint64_t master_seed = 42;
    std::size_t tree_count_override = 0;
    std::size_t subsample_size_override = 0;
};

inline void validate(const ExperimentConfig& config) {
    if (config.specs.empty() || config.n_values.empty() || config.mtry_levels.empty() ||
        config.tree_types.empty() || config.resample_modes.empty()) {
        throw ValidationError("experiment config: every factor list must be nonempty");
    }
    if (config.replicates < 2) {
        throw ValidationError("experiment config: replicates must be >= 2");
    }
    if (config.test_points < 1) {
        throw ValidationError("experiment config: test_points must be >= 1");
    }
    for (const int level : config.mtry_levels) {
        if (level < 1 || level > 3) {
            throw ValidationError("experiment config: mtry levels must be in {1, 2, 3}");
        }
    }
    const auto has_duplicates = [](const auto& values) {
        for (std::size_t i = 0; i < values.size(); ++i) {
            for (std::size_t j = i + 1; j < values.size(); ++j) {
                if (values[i] == values[j]) {
                    return true;
                }
            }
        }
        return false;
    };
    if (has_duplicates(config.specs) || has_duplicates(config.n_values) ||
        has_duplicates(config.mtry_levels) || has_duplicates(config.tree_types) ||
        has_duplicates(config.resample_modes)) {
        throw ValidationError("experiment config: factor lists must not contain duplicates");
    }
    for (const std::size_t n : config.n_values) {
        if (n < 2) {
            throw ValidationError("experiment config: n values must be >= 2");
        }
    }
}

/// Desk-scale grid: the full 11 x 3 x 2 x 2 factor design at n = 200 with
/// 25 replicates and 25 test points.
inline ExperimentConfig desk_preset() {
    ExperimentConfig config;
    config.specs.assign(kAllSimFunctions.begin(), kAllSimFunctions.end());
    config.n_values = {200};
    config.mtry_levels = {1, 2, 3};
    config.tree_types = {TreeType::cart, TreeType::ci};
    config.resample_modes = {ResampleMode::bootstrap, ResampleMode::subsample};
    config.replicates = 25;
    config.test_points = 25;
    config.master_seed = 42;
    return config;
}

/// Full-scale grid: n in {200, 1000, 5000} with 100 replicates and 100 test
/// points. The ci cells at n = 5000 are supported but expensive; the runner
/// prints a projected-cost warning instead of refusing.
inline ExperimentConfig paper_preset() {
    ExperimentConfig config = desk_preset();
    config.n_values = {200, 1000, 5000};
    config.replicates = 100;
    config.test_points = 100;
    return config;
}

/// Sample variance across replicates with denominator R - 1.
inline double empirical_variance(std::span<const double> predictions) {
    const std::size_t r = predictions.size();
    if (r < 2) {
        throw ValidationError("empirical_variance: need at least 2 predictions");
    }
    const double mean = detail::kahan_mean(predictions);
    KahanSum sum;
    for (const double v : predictions) {
        const double d = v - mean;
        sum.add(d * d);
    }
    return sum.value() / (static_cast<double>(r) - 1.0);
}

/// Mean absolute predictive bias: for each test point k, the mean over
/// replicates of |estimate - empirical variance| normalized by the empirical
/// variance, averaged over test points. A zero empirical variance is a hard
/// error (the normalization would divide by it).
inline double mapb(const std::vector<std::vector<double>>& estimates,
                   std::span<const double> empiricals) {
    if (estimates.size() != empiricals.size()) {
        throw ValidationError("mapb: estimate rows must match empirical variance count");
    }
    if (estimates.empty()) {
        throw ValidationError("mapb: need at least one test point");
    }
    KahanSum outer;
    for (std::size_t k = 0; k < estimates.size(); ++k) {
        if (estimates[k].empty()) {
            throw ValidationError("mapb: test point " + std::to_string(k) + " has no estimates");
        }
        if (!(empiricals[k] > 0.0)) {
            throw ValidationError("mapb: empirical variance is zero at test point " +
                                  std::to_string(k));
        }
        KahanSum inner;
        for (const double estimate : estimates[k]) {
            inner.add(std::abs(estimate - empiricals[k]));
        }
        outer.add(inner.value() / static_cast<double>(estimates[k].size()) / empiricals[k]);
    }
    return outer.value() / static_cast<double>(estimates.size());
}

struct CellPointRecord {
    double prediction = 0.0;
    double raw = 0.0;
    double correction = 0.0;
    double corrected = 0.0;
};

/// One factor combination's outcome: summary statistics plus the underlying
/// per-(test point, replicate) records in test-point-major order.
struct CellResult {
    SimFunction spec = SimFunction::sum1;
    std::size_t n = 0;
    int mtry_level = 1;
    std::size_t mtry = 0;
    TreeType tree_type = TreeType::cart;
    ResampleMode resample = ResampleMode::bootstrap;
    double median_empirical_variance = 0.0;
    double mapb = 0.0;
    double runtime_seconds = 0.0;
    std::vector<double> empirical_variances;  // K
    std::vector<CellPointRecord> detail;      // K * R, index k * R + r
};

struct ExperimentResult {
    ExperimentConfig config;
    std::vector<CellResult> cells;
};

inline std::string cell_id(const CellResult& cell) {
    return to_string(cell.spec) + "_n" + std::to_string(cell.n) + "_mtry" +
           std::to_string(cell.mtry) + "_" + to_string(cell.tree_type) + "_" +
           to_string(cell.resample);
}

namespace detail {

// Stream tags for deriving the experiment's rng hierarchy from the master
// seed. Test points depend only on the distribution, training sets on
// (distribution, n, replicate), so every cell sees the same data.
inline constexpr std::uint64_t kTestStream = 101;
inline constexpr std::uint64_t kTrainStream = 102;
inline constexpr std::uint64_t kForestStream = 103;

inline double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t m = values.size() / 2;
    if (values.size() % 2 == 1) {
        return values[m];
    }
    return 0.5 * (values[m - 1] + values[m]);
}

inline nlohmann::json config_to_json(const ExperimentConfig& config) {
    nlohmann::json j;
    std::vector<std::string> specs;
    for (const auto s : config.specs) {
        specs.push_back(to_string(s));
    }
    std::vector<std::string> types;
    for (const auto t : config.tree_types) {
        types.push_back(to_string(t));
    }
    std::vector<std::string> modes;
    for (const auto m : config.resample_modes) {
        modes.push_back(to_string(m));
    }
    j["specs"] = specs;
    j["n_values"] = config.n_values;
    j["mtry_levels"] = config.mtry_levels;
    j["tree_types"] = types;
    j["resample_modes"] = modes;
    j["replicates"] = config.replicates;
    j["test_points"] = config.test_points;
    j["master_seed"] = config.master_seed;
    j["tree_count_override"] = config.tree_count_override;
    j["subsample_size_override"] = config.subsample_size_override;
    return j;
}

inline std::string config_digest(const ExperimentConfig& config) {
    return sha256_hex(config_to_json(config).dump());
}

/// Computes one cell: R forests on R shared training sets, predictions and
/// corrected IJ estimates at the K test points, then the summary statistics.
inline CellResult compute_cell(const ExperimentConfig& config, SimFunction spec, std::size_t n,
                               int mtry_level, TreeType tree_type, ResampleMode resample,
                               unsigned threads) {
    const auto start = std::chrono::steady_clock::now();
    const std::uint64_t ord = sim_function_ordinal(spec);
    const std::size_t K = config.test_points;
    const std::size_t R = config.replicates;

    CellResult cell;
    cell.spec = spec;
    cell.n = n;
    cell.mtry_level = mtry_level;
    cell.mtry = default_mtry(kSimPredictors, mtry_level);
    cell.tree_type = tree_type;
    cell.resample = resample;

    Rng test_rng(derive_seed(config.master_seed, {kTestStream, ord}));
    const auto test_rows = gen_predictors(K, test_rng);

    cell.detail.assign(K * R, CellPointRecord{});
    parallel_for(R, threads, [&](std::size_t r) {
        const SimulationSpec train_spec{spec, n,
                                        derive_seed(config.master_seed, {kTrainStream, ord, n, r})};
        const Dataset data = gen_dataset(train_spec);

        ForestConfig forest_config;
        forest_config.tree_type = tree_type;
        forest_config.resample = resample;
        forest_config.tree_count =
            config.tree_count_override != 0 ? config.tree_count_override : default_tree_count(n);
        if (resample == ResampleMode::subsample) {
            forest_config.subsample_size = config.subsample_size_override != 0
                                               ? config.subsample_size_override
                                               : default_subsample_size(n);
        }
        forest_config.mtry = cell.mtry;
        forest_config.seed = derive_seed(config.master_seed, {kForestStream, ord, n, r});

        const ForestModel forest = fit_forest(data, forest_config, 1);
        const auto results = predict_with_variance(forest, test_rows);
        for (std::size_t k = 0; k < K; ++k) {
            cell.detail[k * R + r] = CellPointRecord{results[k].prediction,
                                                     results[k].variance.raw,
                                                     results[k].variance.correction,
                                                     results[k].variance.corrected};
        }
    });

    cell.empirical_variances.resize(K);
    std::vector<std::vector<double>> estimates(K, std::vector<double>(R));
    std::vector<double> predictions(R);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t r = 0; r < R; ++r) {
            predictions[r] = cell.detail[k * R + r].prediction;
            estimates[k][r] = cell.detail[k * R + r].corrected;
        }
        cell.empirical_variances[k] = empirical_variance(predictions);
    }
    cell.median_empirical_variance = median(cell.empirical_variances);
    try {
        cell.mapb = mapb(estimates, cell.empirical_variances);
    } catch (const ValidationError& e) {
        throw ValidationError("cell " + cell_id(cell) + ": " + e.what());
    }
    cell.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return cell;
}

inline nlohmann::json cell_to_json(const CellResult& cell) {
    nlohmann::json j;
    j["spec"] = to_string(cell.spec);
    j["n"] = cell.n;
    j["mtry_level"] = cell.mtry_level;
    j["mtry"] = cell.mtry;
    j["tree_type"] = to_string(cell.tree_type);
    j["resample"] = to_string(cell.resample);
    j["median_empirical_variance"] = cell.median_empirical_variance;
    j["mapb"] = cell.mapb;
    j["runtime_seconds"] = cell.runtime_seconds;
    j["empirical_variances"] = cell.empirical_variances;
    auto& detail = j["detail"] = nlohmann::json::array();
    for (const auto& record : cell.detail) {
        detail.push_back({record.prediction, record.raw, record.correction, record.corrected});
    }
    return j;
}

inline CellResult cell_from_json(const nlohmann::json& j) {
    CellResult cell;
    cell.spec = parse_sim_function(j.at("spec").get<std::string>());
    cell.n = j.at("n").get<std::size_t>();
    cell.mtry_level = j.at("mtry_level").get<int>();
    cell.mtry = j.at("mtry").get<std::size_t>();
    cell.tree_type = parse_tree_type(j.at("tree_type").get<std::string>());
    cell.resample = parse_resample_mode(j.at("resample").get<std::string>());
    cell.median_empirical_variance = j.at("median_empirical_variance").get<double>();
    cell.mapb = j.at("mapb").get<double>();
    cell.runtime_seconds = j.at("runtime_seconds").get<double>();
    cell.empirical_variances = j.at("empirical_variances").get<std::vector<double>>();
    for (const auto& record : j.at("detail")) {
        cell.detail.push_back(CellPointRecord{record.at(0).get<double>(), record.at(1).get<double>(),
                                              record.at(2).get<double>(),
                                              record.at(3).get<double>()});
    }
    return cell;
}

}  // namespace detail

/// results.csv content. The runtime column is informational; digests that
/// certify reproducibility use include_runtime = false so that resumed and
/// uninterrupted runs compare equal.
inline std::string results_csv_text(const ExperimentResult& result, bool include_runtime = true) {
    std::string out =
        "spec,n,mtry_level,mtry,tree_type,resample,median_empirical_variance,mapb";
    if (include_runtime) {
        out += ",runtime_seconds";
    }
    out += "\n";
    for (const auto& cell : result.cells) {
        out += to_string(cell.spec) + "," + std::to_string(cell.n) + "," +
               std::to_string(cell.mtry_level) + "," + std::to_string(cell.mtry) + "," +
               to_string(cell.tree_type) + "," + to_string(cell.resample) + "," +
               format_double(cell.median_empirical_variance) + "," + format_double(cell.mapb);
        if (include_runtime) {
            out += "," + format_double(cell.runtime_seconds);
        }
        out += "\n";
    }
    return out;
}

/// Digest over everything except runtimes; identical configs must reproduce
/// identical digests no matter the thread count or interrupt/resume history.
inline std::string semantic_digest(const ExperimentResult& result) {
    return sha256_hex(results_csv_text(result, false));
}

inline std::string detail_csv_text(const CellResult& cell) {
    const std::size_t K = cell.empirical_variances.size();
    const std::size_t R = K == 0 ? 0 : cell.detail.size() / K;
    std::string out =
        "test_point,replicate,prediction,variance_raw,variance_correction,variance_corrected,"
        "empirical_variance\n";
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t r = 0; r < R; ++r) {
            const auto& record = cell.detail[k * R + r];
            out += std::to_string(k) + "," + std::to_string(r) + "," +
                   format_double(record.prediction) + "," + format_double(record.raw) + "," +
                   format_double(record.correction) + "," + format_double(record.corrected) + "," +
                   format_double(cell.empirical_variances[k]) + "\n";
        }
    }
    return out;
}

struct ExperimentOptions {
    std::string out_dir;      // empty: compute only, write nothing
    std::string resume_from;  // explicit checkpoint path; implies resume
    bool resume = false;      // resume from <out_dir>/checkpoint.json
    unsigned threads = 1;
    std::ostream* log = nullptr;
};

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path.string());
    }
    out << text;
    out.flush();
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

inline void write_checkpoint(const std::filesystem::path& path, const ExperimentConfig& config,
                             const std::vector<CellResult>& done) {
    nlohmann::json j;
    j["format"] = "rfvar-checkpoint";
    j["version"] = 1;
    j["config"] = config_to_json(config);
    j["config_digest"] = config_digest(config);
    auto& cells = j["cells"] = nlohmann::json::object();
    for (const auto& cell : done) {
        cells[cell_id(cell)] = cell_to_json(cell);
    }
    const std::filesystem::path tmp = path.string() + ".tmp";
    write_text_file(tmp, j.dump());
    std::filesystem::rename(tmp, path);
}

inline std::map<std::string, CellResult> read_checkpoint(const std::filesystem::path& path,
                                                         const ExperimentConfig& config) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open checkpoint: " + path.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed checkpoint " + path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "rfvar-checkpoint" || j.value("version", 0) != 1) {
        throw ValidationError("not a rfvar checkpoint: " + path.string());
    }
    if (j.value("config_digest", "") != config_digest(config)) {
        throw ValidationError("checkpoint " + path.string() +
                              " was created with a different configuration");
    }
    std::map<std::string, CellResult> cells;
    for (const auto& [key, value] : j.at("cells").items()) {
        cells[key] = cell_from_json(value);
    }
    return cells;
}

/// Crude up-front cost projection. Large grids (notably ci cells at
/// n = 5000) produce a warning with the projected total, never a failure.
inline void warn_if_expensive(const ExperimentConfig& config, std::ostream* log) {
    if (log == nullptr) {
        return;
    }
    double total_ops = 0.0;
    for (const std::size_t n : config.n_values) {
        const double B = config.tree_count_override != 0
                             ? static_cast<double>(config.tree_count_override)
                             : static_cast<double>(default_tree_count(n));
        for (const auto mode : config.resample_modes) {
            const double active =
                mode == ResampleMode::bootstrap
                    ? static_cast<double>(n)
                    : static_cast<double>(config.subsample_size_override != 0
                                              ? config.subsample_size_override
                                              : default_subsample_size(n));
            for (const int level : config.mtry_levels) {
                const double mtry = static_cast<double>(default_mtry(kSimPredictors, level));
                const double fit_ops = static_cast<double>(config.replicates) * B * active *
                                       std::max(std::log2(active), 1.0) * mtry;
                const double ij_ops = static_cast<double>(config.replicates) *
                                      static_cast<double>(config.test_points) * B *
                                      static_cast<double>(n);
                total_ops += static_cast<double>(config.specs.size()) *
                             static_cast<double>(config.tree_types.size()) * (fit_ops + ij_ops);
            }
        }
    }
    if (total_ops > 5e11) {
        (*log) << "warning: projected workload is roughly " << format_double(total_ops / 1e9)
               << "e9 elementary operations (~" << format_double(total_ops / 1e9 / 3600.0)
               << " hours at 1e9 ops/s per thread); consider fewer cells or overrides\n";
    }
}

}  // namespace detail

/// Runs every cell of the factor grid in a fixed order and, when out_dir is
/// set, emits results.csv, per-cell detail CSVs and a checkpoint.json that
/// is rewritten after each completed cell. Resuming from a checkpoint skips
/// its completed cells and reproduces the uninterrupted results bit-exactly
/// (runtimes of restored cells are the originals).
inline ExperimentResult run_experiment(const ExperimentConfig& config,
                                       const ExperimentOptions& options = {}) {
    validate(config);
    const bool writing = !options.out_dir.empty();
    std::filesystem::path out_dir(options.out_dir);
    std::filesystem::path checkpoint_path;
    std::map<std::string, CellResult> done;

    if (writing) {
        std::filesystem::create_directories(out_dir);
        checkpoint_path = out_dir / "checkpoint.json";
    }
    if (!options.resume_from.empty()) {
        done = detail::read_checkpoint(options.resume_from, config);
    } else if (options.resume && writing && std::filesystem::exists(checkpoint_path)) {
        done = detail::read_checkpoint(checkpoint_path, config);
    }

    detail::warn_if_expensive(config, options.log);

    ExperimentResult result;
    result.config = config;
    std::vector<CellResult> completed;
    for (const auto& [id, cell] : done) {
        completed.push_back(cell);
    }

    for (const auto spec : config.specs) {
        for (const std::size_t n : config.n_values) {
            for (const int level : config.mtry_levels) {
                for (const auto tree_type : config.tree_types) {
                    for (const auto resample : config.resample_modes) {
                        CellResult probe;
                        probe.spec = spec;
                        probe.n = n;
                        probe.mtry_level = level;
                        probe.mtry = default_mtry(kSimPredictors, level);
                        probe.tree_type = tree_type;
                        probe.resample = resample;
                        const std::string id = cell_id(probe);

                        const auto it = done.find(id);
                        if (it != done.end()) {
                            result.cells.push_back(it->second);
                            continue;
                        }
                        if (options.log != nullptr) {
                            (*options.log) << "cell " << id << " ..." << std::flush;
                        }
                        CellResult cell = detail::compute_cell(config, spec, n, level, tree_type,
                                                               resample, options.threads);
                        if (options.log != nullptr) {
                            (*options.log) << " mapb=" << format_double(cell.mapb) << " ("
                                           << format_double(cell.runtime_seconds) << "s)\n";
                        }
                        result.cells.push_back(cell);
                        if (writing) {
                            completed.push_back(cell);
                            detail::write_checkpoint(checkpoint_path, config, completed);
                        }
                    }
                }
            }
        }
    }

    if (writing) {
        detail::write_text_file(out_dir / "results.csv", results_csv_text(result, true));
        for (const auto& cell : result.cells) {
            detail::write_text_file(out_dir / ("detail_" + cell_id(cell) + ".csv"),
                                    detail_csv_text(cell));
        }
    }
    return result;
}

}  // namespace rfvar

#endif  // RFVAR_EXPERIMENT_HPP
