#ifndef RFVAR_FOREST_HPP
#define RFVAR_FOREST_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rfvar/cart.hpp"
#include "rfvar/citree.hpp"
#include "rfvar/common.hpp"
#include "rfvar/dataset.hpp"
#include "rfvar/random.hpp"
#include "rfvar/resampling.hpp"
#include "rfvar/tree.hpp"

namespace rfvar {

/// Full training configuration for an ensemble. tree_count and
/// subsample_size of 0 mean "use the size defaults at fit time"
/// (5n trees, round(n^0.7) subsample).
struct ForestConfig {
    TreeType tree_type = TreeType::cart;
    ResampleMode resample = ResampleMode::bootstrap;
    std::size_t tree_count = 0;      // B
    std::size_t subsample_size = 0;  // s, ignored for bootstrap
    std::size_t mtry = 0;            // 0 = default_mtry(p, 1) at fit time
    std::size_t min_node_size = 5;
    double alpha = 0.05;  // ci only
    std::uint64_t seed = 1;

    bool operator==(const ForestConfig&) const = default;
};

/// Trained ensemble: B trees plus the full count matrix N*_bi (one
/// ResampleCounts row per tree), which the variance estimators consume.
struct ForestModel {
    std::vector<TreeModel> trees;
    std::vector<ResampleCounts> counts;
    ForestConfig config;
    std::size_t n = 0;
    std::size_t p = 0;
    std::vector<std::string> column_names;
    std::string response_name;

    std::size_t tree_count() const { return trees.size(); }

    bool operator==(const ForestModel&) const = default;
};

/// Paper-convention mtry levels: 1 -> max(floor(p/3), 1),
/// 2 -> max(floor(2p/3), 1), 3 -> max(p, 1) except p = 10 maps to 9 (all-
/// variables search at p = 10 would reduce the forest to bagged trees).
inline std::size_t default_mtry(std::size_t p, int level) {
    if (p < 1) {
        throw ValidationError("default_mtry: p must be >= 1");
    }
    switch (level) {
        case 1:
            return std::max<std::size_t>(p / 3, 1);
        case 2:
            return std::max<std::size_t>(2 * p / 3, 1);
        case 3:
            return p == 10 ? 9 : std::max<std::size_t>(p, 1);
        default:
            throw ValidationError("default_mtry: level must be 1, 2 or 3");
    }
}

/// Default ensemble size B = 5n.
inline std::size_t default_tree_count(std::size_t n) {
    if (n < 1) {
        throw ValidationError("default_tree_count: n must be >= 1");
    }
    return 5 * n;
}

namespace detail {

inline double kahan_mean(std::span<const double> values) {
    KahanSum sum;
    for (const double v : values) {
        sum.add(v);
    }
    return sum.value() / static_cast<double>(values.size());
}

/// Resolves fit-time defaults and validates the configuration against the
/// training data dimensions.
inline ForestConfig resolve_config(const ForestConfig& config, std::size_t n, std::size_t p) {
    ForestConfig resolved = config;
    if (resolved.tree_count == 0) {
        resolved.tree_count = default_tree_count(n);
    }
    if (resolved.mtry == 0) {
        resolved.mtry = default_mtry(p, 1);
    }
    if (resolved.resample == ResampleMode::subsample) {
        if (resolved.subsample_size == 0) {
            resolved.subsample_size = default_subsample_size(n);
        }
        if (resolved.subsample_size > n) {
            throw ValidationError("subsample size " + std::to_string(resolved.subsample_size) +
                                  " exceeds training rows " + std::to_string(n));
        }
    } else {
        resolved.subsample_size = n;
    }
    if (resolved.mtry > p) {
        throw ValidationError("mtry " + std::to_string(resolved.mtry) + " exceeds feature count " +
                              std::to_string(p));
    }
    if (resolved.min_node_size < 1) {
        throw ValidationError("min_node_size must be >= 1");
    }
    if (resolved.tree_type == TreeType::ci && !(resolved.alpha > 0.0 && resolved.alpha < 1.0)) {
        throw ValidationError("alpha must be in (0, 1)");
    }
    return resolved;
}

}  // namespace detail

/// Trains B trees, each on its own resample drawn per config.resample, and
/// stores the per-tree count vectors. Tree b's resample and fit streams are
/// derived from (seed, b), so the result is bit-identical for a fixed seed
/// no matter how many threads run the loop.
inline ForestModel fit_forest(const Dataset& data, const ForestConfig& config,
                              unsigned threads = 1) {
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    const ForestConfig resolved = detail::resolve_config(config, n, p);

    ForestModel model;
    model.config = resolved;
    model.n = n;
    model.p = p;
    model.column_names = data.column_names();
    model.response_name = data.response_name();
    model.trees.resize(resolved.tree_count);
    std::vector<std::optional<ResampleCounts>> counts(resolved.tree_count);

    parallel_for(resolved.tree_count, threads, [&](std::size_t b) {
        Rng resample_rng = derive_rng(resolved.seed, {b, 0});
        Rng tree_rng = derive_rng(resolved.seed, {b, 1});
        ResampleCounts w = resolved.resample == ResampleMode::bootstrap
                               ? bootstrap_counts(n, resample_rng)
                               : subsample_counts(n, resolved.subsample_size, resample_rng);
        model.trees[b] =
            resolved.tree_type == TreeType::cart
                ? fit_cart(data, w, resolved.mtry, resolved.min_node_size, tree_rng)
                : fit_citree(data, w, resolved.mtry, resolved.min_node_size, resolved.alpha,
                             tree_rng);
        counts[b] = std::move(w);
    });

    model.counts.reserve(resolved.tree_count);
    for (auto& c : counts) {
        model.counts.push_back(std::move(*c));
    }
    return model;
}

/// Per-tree predictions T*_b at x, in tree order.
inline std::vector<double> predict_per_tree(const ForestModel& forest,
                                            std::span<const double> x) {
    std::vector<double> out(forest.trees.size());
    for (std::size_t b = 0; b < forest.trees.size(); ++b) {
        out[b] = forest.trees[b].predict(x);
    }
    return out;
}

/// Ensemble prediction: the mean of the per-tree predictions.
inline double predict(const ForestModel& forest, std::span<const double> x) {
    const auto per_tree = predict_per_tree(forest, x);
    return detail::kahan_mean(per_tree);
}

}  // namespace rfvar

#endif  // RFVAR_FOREST_HPP
