#ifndef RFVAR_IJ_VARIANCE_HPP
#define RFVAR_IJ_VARIANCE_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rfvar/common.hpp"
#include "rfvar/forest.hpp"

namespace rfvar {

enum class VarianceEstimator { infinitesimal_jackknife, jackknife_after_bootstrap };

/// Which Monte Carlo bias correction to subtract from the raw covariance
/// estimate:
///   eq5:          s(n-s)/n * v/B   (vanishes when s == n)
///   bootstrap:    n * v/B          (the full-sample-size correction)
///   none:         0
///   mode_default: eq5 for subsample forests, bootstrap for bootstrap
///                 forests (the s(n-s)/n factor is identically zero at
///                 s == n and cannot correct anything there).
enum class BiasCorrection { mode_default, eq5, bootstrap, none };

inline std::string to_string(BiasCorrection bc) {
    switch (bc) {
        case BiasCorrection::eq5:
            return "eq5";
        case BiasCorrection::bootstrap:
            return "bootstrap";
        case BiasCorrection::none:
            return "none";
        default:
            return "mode-default";
    }
}

inline BiasCorrection parse_bias_correction(const std::string& text) {
    if (text == "eq5") {
        return BiasCorrection::eq5;
    }
    if (text == "bootstrap") {
        return BiasCorrection::bootstrap;
    }
    if (text == "none") {
        return BiasCorrection::none;
    }
    throw ValidationError("unknown bias correction '" + text + "' (valid: eq5, bootstrap, none)");
}

/// Variance estimate split into the raw sum of squared covariances, the
/// Monte Carlo bias correction, and their difference. corrected may be
/// negative; callers that need a nonnegative number apply their own floor.
struct VarianceEstimate {
    double raw = 0.0;
    double correction = 0.0;
    double corrected = 0.0;  // always exactly raw - correction
    std::size_t tree_count = 0;
    VarianceEstimator estimator = VarianceEstimator::infinitesimal_jackknife;
};

namespace detail {

inline BiasCorrection resolve_bias_correction(const ForestModel& forest, BiasCorrection bc) {
    if (bc != BiasCorrection::mode_default) {
        return bc;
    }
    return forest.config.resample == ResampleMode::bootstrap ? BiasCorrection::bootstrap
                                                             : BiasCorrection::eq5;
}

/// Infinitesimal-jackknife core over precomputed per-tree predictions.
/// With e = s/n and T-bar the mean prediction:
///   C_i  = (1/B) sum_b (N_bi - e) (T_b - T-bar)
///   raw  = sum_i C_i^2
///   v    = (1/B) sum_b (T_b - T-bar)^2
/// The C_i accumulation runs tree-major over the contiguous count rows with
/// Neumaier compensation; at B = 5n the naive sum's rounding error is
/// visible at the oracle tolerances.
inline VarianceEstimate ij_from_tree_predictions(const ForestModel& forest,
                                                 std::span<const double> per_tree,
                                                 BiasCorrection bc) {
    const std::size_t B = per_tree.size();
    const std::size_t n = forest.n;
    if (B < 2) {
        throw ValidationError("ij_variance: need at least 2 trees");
    }
    if (forest.counts.size() != B) {
        throw ValidationError("ij_variance: forest is missing its resample counts");
    }
    const double s = static_cast<double>(forest.config.subsample_size);
    const double inclusion_mean = s / static_cast<double>(n);  // e = s/n; 1 for bootstrap

    const double mean = kahan_mean(per_tree);

    KahanSum tree_var;
    std::vector<double> cov(n, 0.0);
    std::vector<double> cov_comp(n, 0.0);  // per-element Neumaier compensation
    for (std::size_t b = 0; b < B; ++b) {
        const double d = per_tree[b] - mean;
        tree_var.add(d * d);
        const std::uint32_t* row = forest.counts[b].counts.data();
        for (std::size_t i = 0; i < n; ++i) {
            const double term = (static_cast<double>(row[i]) - inclusion_mean) * d;
            const double t = cov[i] + term;
            if (std::abs(cov[i]) >= std::abs(term)) {
                cov_comp[i] += (cov[i] - t) + term;
            } else {
                cov_comp[i] += (term - t) + cov[i];
            }
            cov[i] = t;
        }
    }

    VarianceEstimate out;
    out.tree_count = B;
    out.estimator = VarianceEstimator::infinitesimal_jackknife;
    KahanSum raw;
    for (std::size_t i = 0; i < n; ++i) {
        const double ci = (cov[i] + cov_comp[i]) / static_cast<double>(B);
        raw.add(ci * ci);
    }
    out.raw = raw.value();

    const double v_hat = tree_var.value() / static_cast<double>(B);
    switch (resolve_bias_correction(forest, bc)) {
        case BiasCorrection::eq5:
            out.correction = s * (static_cast<double>(n) - s) / static_cast<double>(n) * v_hat /
                             static_cast<double>(B);
            break;
        case BiasCorrection::bootstrap:
            out.correction = static_cast<double>(n) * v_hat / static_cast<double>(B);
            break;
        default:
            out.correction = 0.0;
            break;
    }
    out.corrected = out.raw - out.correction;
    return out;
}

}  // namespace detail

/// Bias-corrected infinitesimal-jackknife variance of the forest prediction
/// at x, computed from the stored count matrix and the per-tree predictions.
inline VarianceEstimate ij_variance(const ForestModel& forest, std::span<const double> x,
                                    BiasCorrection bc = BiasCorrection::mode_default) {
    const auto per_tree = predict_per_tree(forest, x);
    return detail::ij_from_tree_predictions(forest, per_tree, bc);
}

/// Jackknife-after-bootstrap variance: for each training observation i,
/// average the predictions of the trees whose resample omitted i, then take
/// (n-1)/n times the squared spread of those leave-one-out averages.
inline VarianceEstimate jackknife_after_bootstrap(const ForestModel& forest,
                                                  std::span<const double> x) {
    if (forest.config.resample != ResampleMode::bootstrap) {
        throw ValidationError("jackknife_after_bootstrap requires a bootstrap-mode forest");
    }
    const std::size_t B = forest.trees.size();
    const std::size_t n = forest.n;
    if (B < 1 || forest.counts.size() != B) {
        throw ValidationError("jackknife_after_bootstrap: forest is missing trees or counts");
    }
    const auto per_tree = predict_per_tree(forest, x);

    std::vector<KahanSum> omit_sums(n);
    std::vector<std::size_t> omit_trees(n, 0);
    for (std::size_t b = 0; b < B; ++b) {
        const std::uint32_t* row = forest.counts[b].counts.data();
        for (std::size_t i = 0; i < n; ++i) {
            if (row[i] == 0) {
                omit_sums[i].add(per_tree[b]);
                ++omit_trees[i];
            }
        }
    }

    std::vector<double> loo(n);
    KahanSum loo_total;
    for (std::size_t i = 0; i < n; ++i) {
        if (omit_trees[i] == 0) {
            throw ValidationError("jackknife_after_bootstrap: observation " + std::to_string(i) +
                                  " appears in every resample");
        }
        loo[i] = omit_sums[i].value() / static_cast<double>(omit_trees[i]);
        loo_total.add(loo[i]);
    }
    const double loo_mean = loo_total.value() / static_cast<double>(n);

    KahanSum spread;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = loo[i] - loo_mean;
        spread.add(d * d);
    }

    VarianceEstimate out;
    out.tree_count = B;
    out.estimator = VarianceEstimator::jackknife_after_bootstrap;
    out.raw = (static_cast<double>(n) - 1.0) / static_cast<double>(n) * spread.value();
    out.correction = 0.0;
    out.corrected = out.raw;
    return out;
}

struct PredictionWithVariance {
    double prediction = 0.0;
    VarianceEstimate variance;
};

/// Batch prediction + IJ variance for a k x p test matrix. Each row shares
/// one pass over the per-tree predictions between the ensemble mean and the
/// covariance accumulation, and equals the single-point calls bit-exactly.
inline std::vector<PredictionWithVariance> predict_with_variance(
    const ForestModel& forest, const std::vector<std::vector<double>>& x_rows,
    BiasCorrection bc = BiasCorrection::mode_default, unsigned threads = 1) {
    for (std::size_t k = 0; k < x_rows.size(); ++k) {
        if (x_rows[k].size() != forest.p) {
            throw ValidationError("prediction row " + std::to_string(k + 1) + " has width " +
                                  std::to_string(x_rows[k].size()) + ", model expects " +
                                  std::to_string(forest.p));
        }
    }
    std::vector<PredictionWithVariance> out(x_rows.size());
    parallel_for(x_rows.size(), threads, [&](std::size_t k) {
        const auto per_tree = predict_per_tree(forest, x_rows[k]);
        out[k].prediction = detail::kahan_mean(per_tree);
        out[k].variance = detail::ij_from_tree_predictions(forest, per_tree, bc);
    });
    return out;
}

}  // namespace rfvar

#endif  // RFVAR_IJ_VARIANCE_HPP
