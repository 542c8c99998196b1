#ifndef RFVAR_CITREE_HPP
#define RFVAR_CITREE_HPP

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "rfvar/dataset.hpp"
#include "rfvar/random.hpp"
#include "rfvar/resampling.hpp"
#include "rfvar/tree.hpp"
#include "rfvar/tree_builder.hpp"

namespace rfvar {

/// Linear permutation statistic T = sum_i w_i g_i h_i together with its
/// exact moments under random rearrangement of the h labels across the
/// w-weighted observations, the standardized statistic c, and the
/// two-sided normal-approximation p-value.
struct LinearStatistic {
    double t = 0.0;
    double mu = 0.0;
    double sigma2 = 0.0;
    double c = 0.0;
    double p_value = 1.0;
};

namespace detail {

/// Weighted response moments of a node: W = sum w, Eh = weighted mean,
/// Vh = weighted population variance.
struct NodeResponseStats {
    double total_weight = 0.0;
    double mean = 0.0;
    double variance = 0.0;
};

inline NodeResponseStats node_response_stats(std::span<const std::uint32_t> rows, const double* h,
                                             const std::uint32_t* w) {
    NodeResponseStats stats;
    KahanSum sum;
    for (const auto r : rows) {
        stats.total_weight += w[r];
        sum.add(static_cast<double>(w[r]) * h[r]);
    }
    stats.mean = sum.value() / stats.total_weight;
    KahanSum var;
    for (const auto r : rows) {
        const double d = h[r] - stats.mean;
        var.add(static_cast<double>(w[r]) * d * d);
    }
    stats.variance = var.value() / stats.total_weight;
    return stats;
}

/// Closed-form permutation moments for the linear statistic given the g
/// summaries. A non-positive sigma2 (constant g or constant h, possibly via
/// rounding underflow) is read as "no association": c = 0, p = 1.
inline LinearStatistic make_linear_statistic(const NodeResponseStats& stats, double sum_wg,
                                             double sum_wg2, double t) {
    const double W = stats.total_weight;
    LinearStatistic out;
    out.t = t;
    out.mu = stats.mean * sum_wg;
    out.sigma2 = (W / (W - 1.0)) * stats.variance * sum_wg2 -
                 (1.0 / (W - 1.0)) * stats.variance * sum_wg * sum_wg;
    if (out.sigma2 > 0.0) {
        out.c = std::abs(out.t - out.mu) / std::sqrt(out.sigma2);
        out.p_value = std::erfc(out.c / std::numbers::sqrt2);
    } else {
        out.sigma2 = std::max(out.sigma2, 0.0);
        out.c = 0.0;
        out.p_value = 1.0;
    }
    return out;
}

inline LinearStatistic linear_statistic_rows(const double* g, const double* h,
                                             const std::uint32_t* w,
                                             std::span<const std::uint32_t> rows) {
    const NodeResponseStats stats = node_response_stats(rows, h, w);
    if (stats.total_weight < 2.0) {
        throw ValidationError("linear_statistic: total weight must be >= 2");
    }
    KahanSum sum_wg, sum_wg2, sum_wgh;
    for (const auto r : rows) {
        const double wi = w[r];
        const double gi = g[r];
        sum_wg.add(wi * gi);
        sum_wg2.add(wi * gi * gi);
        sum_wgh.add(wi * gi * h[r]);
    }
    return make_linear_statistic(stats, sum_wg.value(), sum_wg2.value(), sum_wgh.value());
}

struct CiCutCandidate {
    double cut = 0.0;
    double c = 0.0;
};

/// Cut maximizing the standardized two-sample statistic, evaluated for every
/// midpoint cut in one sorted sweep. With g = indicator(x <= cut), the g
/// summaries collapse to the left-side prefix weight, so each candidate costs
/// O(1): t = prefix(w*y), sum_wg = sum_wg2 = prefix(w),
/// sigma2 = Vh * WL * (W - WL) / (W - 1). Ties go to the smallest cut.
inline std::optional<CiCutCandidate> best_split_ci_rows(const double* x, const double* y,
                                                        const std::uint32_t* w,
                                                        std::span<const std::uint32_t> rows,
                                                        const NodeResponseStats& stats,
                                                        SplitScratch& scratch) {
    auto& order = scratch.order;
    order.clear();
    for (const auto r : rows) {
        order.emplace_back(x[r], r);
    }
    if (order.size() < 2) {
        return std::nullopt;
    }
    std::sort(order.begin(), order.end());
    if (order.front().first == order.back().first) {
        return std::nullopt;
    }

    const double W = stats.total_weight;
    std::optional<CiCutCandidate> best;
    double left_w = 0.0;
    KahanSum left_wy;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const std::uint32_t r = order[i].second;
        left_w += w[r];
        left_wy.add(static_cast<double>(w[r]) * y[r]);
        if (order[i].first == order[i + 1].first) {
            continue;
        }
        const double sigma2 = stats.variance * left_w * (W - left_w) / (W - 1.0);
        const double c =
            sigma2 > 0.0 ? std::abs(left_wy.value() - stats.mean * left_w) / std::sqrt(sigma2)
                         : 0.0;
        if (!best || c > best->c) {
            best = CiCutCandidate{split_midpoint(order[i].first, order[i + 1].first), c};
        }
    }
    return best;
}

struct CiSelection {
    std::size_t variable = 0;
    double p_value = 1.0;
    double c = 0.0;
};

/// Smallest-p-value candidate. Selection runs on the standardized statistic
/// (p is strictly decreasing in c, and c does not saturate the way erfc
/// does), with ties going to the smallest variable index.
inline std::optional<CiSelection> select_variable_rows(const Dataset& data,
                                                       const std::uint32_t* w,
                                                       std::span<const std::uint32_t> rows,
                                                       std::span<const std::size_t> candidates,
                                                       double alpha,
                                                       const NodeResponseStats& stats) {
    if (candidates.empty()) {
        throw ValidationError("select_variable: candidate set must not be empty");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("select_variable: alpha must be in (0, 1)");
    }
    const double* h = data.response().data();
    std::optional<CiSelection> best;
    for (const std::size_t j : candidates) {
        const double* g = data.column(j).data();
        KahanSum sum_wg, sum_wg2, sum_wgh;
        for (const auto r : rows) {
            const double wi = w[r];
            const double gi = g[r];
            sum_wg.add(wi * gi);
            sum_wg2.add(wi * gi * gi);
            sum_wgh.add(wi * gi * h[r]);
        }
        const LinearStatistic stat =
            make_linear_statistic(stats, sum_wg.value(), sum_wg2.value(), sum_wgh.value());
        if (!best || stat.c > best->c) {
            best = CiSelection{j, stat.p_value, stat.c};
        }
    }
    const double adjusted =
        std::min(1.0, best->p_value * static_cast<double>(candidates.size()));
    if (adjusted > alpha) {
        return std::nullopt;
    }
    return best;
}

struct CiChooser {
    const Dataset& data;
    const std::uint32_t* weights;
    double alpha;

    std::optional<SplitRule> operator()(std::span<const std::uint32_t> rows,
                                        std::span<const std::size_t> candidates,
                                        SplitScratch& scratch) const {
        const NodeResponseStats stats =
            node_response_stats(rows, data.response().data(), weights);
        if (stats.total_weight < 2.0 || !(stats.variance > 0.0)) {
            return std::nullopt;
        }
        const auto selection =
            select_variable_rows(data, weights, rows, candidates, alpha, stats);
        if (!selection) {
            return std::nullopt;
        }
        const auto cut = best_split_ci_rows(data.column(selection->variable).data(),
                                            data.response().data(), weights, rows, stats, scratch);
        if (!cut) {
            return std::nullopt;
        }
        return SplitRule{selection->variable, cut->cut};
    }
};

inline std::vector<std::uint32_t> active_rows(const ResampleCounts& w) {
    std::vector<std::uint32_t> rows;
    for (std::size_t i = 0; i < w.counts.size(); ++i) {
        if (w.counts[i] > 0) {
            rows.push_back(static_cast<std::uint32_t>(i));
        }
    }
    return rows;
}

}  // namespace detail

/// Strasser-Weber linear statistic for influence g against labels h over
/// count-weighted observations. With W = sum(w), Eh and Vh the weighted mean
/// and population variance of h:
///   t      = sum w_i g_i h_i
///   mu     = Eh * sum w_i g_i
///   sigma2 = W/(W-1) * Vh * sum w_i g_i^2  -  1/(W-1) * Vh * (sum w_i g_i)^2
///   c      = |t - mu| / sqrt(sigma2)   (0 when sigma2 underflows to <= 0)
///   p      = two-sided standard normal tail at c.
inline LinearStatistic linear_statistic(std::span<const double> g, std::span<const double> h,
                                        const ResampleCounts& w) {
    if (g.size() != h.size() || g.size() != w.counts.size()) {
        throw ValidationError("linear_statistic: g, h and weights must have equal length");
    }
    const auto rows = detail::active_rows(w);
    if (rows.size() < 1 || w.total() < 2) {
        throw ValidationError("linear_statistic: total weight must be >= 2");
    }
    return detail::linear_statistic_rows(g.data(), h.data(), w.counts.data(), rows);
}

struct VariableSelection {
    std::size_t variable = 0;
    double p_value = 1.0;  // unadjusted; the acceptance gate is Bonferroni-adjusted
};

/// Candidate most associated with the response by permutation-test p-value.
/// Returns nullopt when the Bonferroni-adjusted smallest p-value exceeds
/// alpha, in which case the caller's node becomes a leaf.
inline std::optional<VariableSelection> select_variable(const Dataset& data,
                                                        const ResampleCounts& w,
                                                        std::span<const std::size_t> candidates,
                                                        double alpha) {
    const auto rows = detail::active_rows(w);
    const auto stats = detail::node_response_stats(rows, data.response().data(), w.counts.data());
    if (stats.total_weight < 2.0) {
        throw ValidationError("select_variable: total weight must be >= 2");
    }
    const auto selection =
        detail::select_variable_rows(data, w.counts.data(), rows, candidates, alpha, stats);
    if (!selection) {
        return std::nullopt;
    }
    return VariableSelection{selection->variable, selection->p_value};
}

/// Cut maximizing the standardized two-sample statistic of
/// indicator(x <= cut) against y; nullopt when x has fewer than two distinct
/// active values.
inline std::optional<double> best_split_ci(std::span<const double> x, std::span<const double> y,
                                           const ResampleCounts& w) {
    if (x.size() != y.size() || x.size() != w.counts.size()) {
        throw ValidationError("best_split_ci: column, response and weights must have equal length");
    }
    const auto rows = detail::active_rows(w);
    const auto stats = detail::node_response_stats(rows, y.data(), w.counts.data());
    detail::SplitScratch scratch;
    const auto cut =
        detail::best_split_ci_rows(x.data(), y.data(), w.counts.data(), rows, stats, scratch);
    if (!cut) {
        return std::nullopt;
    }
    return cut->cut;
}

/// Conditional-inference regression tree: per node, mtry candidate variables
/// are tested for association with the response via the permutation
/// framework; if the smallest Bonferroni-adjusted p-value clears alpha the
/// node splits at the cut maximizing the standardized statistic, otherwise
/// it becomes a leaf. The response enters split placement only through the
/// test statistic; predictions are the usual count-weighted leaf means.
inline TreeModel fit_citree(const Dataset& data, const ResampleCounts& w, std::size_t mtry,
                            std::size_t min_node_size, double alpha, Rng& rng) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ValidationError("fit_citree: alpha must be in (0, 1)");
    }
    detail::TreeGrowParams params{mtry, min_node_size};
    detail::CiChooser chooser{data, w.counts.data(), alpha};
    return detail::grow_tree(data, w, params, TreeType::ci, rng, chooser);
}

}  // namespace rfvar

#endif  // RFVAR_CITREE_HPP
