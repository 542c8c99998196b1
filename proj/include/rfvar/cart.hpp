#ifndef RFVAR_CART_HPP
#define RFVAR_CART_HPP

#include <algorithm>
#include <optional>
#include <span>
#include <vector>

#include "rfvar/dataset.hpp"
#include "rfvar/random.hpp"
#include "rfvar/resampling.hpp"
#include "rfvar/tree.hpp"
#include "rfvar/tree_builder.hpp"

namespace rfvar {

struct SseSplit {
    double cut = 0.0;
    double sse_after = 0.0;
};

namespace detail {

/// Weighted SSE-minimizing cut over the given active rows. Candidate cuts
/// are midpoints between consecutive distinct x values; one sorted sweep
/// with prefix sums of (w, w*y, w*y^2) evaluates every candidate. Ties go
/// to the smallest cut.
inline std::optional<SseSplit> best_split_sse_rows(const double* x, const double* y,
                                                   const std::uint32_t* w,
                                                   std::span<const std::uint32_t> rows,
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

    double total_w = 0.0, total_s = 0.0, total_q = 0.0;
    for (const auto& [xv, r] : order) {
        const double wi = w[r];
        const double yi = y[r];
        total_w += wi;
        total_s += wi * yi;
        total_q += wi * yi * yi;
    }

    std::optional<SseSplit> best;
    double left_w = 0.0, left_s = 0.0, left_q = 0.0;
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        const std::uint32_t r = order[i].second;
        const double wi = w[r];
        const double yi = y[r];
        left_w += wi;
        left_s += wi * yi;
        left_q += wi * yi * yi;
        if (order[i].first == order[i + 1].first) {
            continue;  // not a boundary between distinct values
        }
        const double right_w = total_w - left_w;
        const double sse = (left_q - left_s * left_s / left_w) +
                           ((total_q - left_q) - (total_s - left_s) * (total_s - left_s) / right_w);
        if (!best || sse < best->sse_after) {
            best = SseSplit{split_midpoint(order[i].first, order[i + 1].first), sse};
        }
    }
    return best;
}

struct CartChooser {
    const Dataset& data;
    const std::uint32_t* weights;

    std::optional<SplitRule> operator()(std::span<const std::uint32_t> rows,
                                        std::span<const std::size_t> candidates,
                                        SplitScratch& scratch) const {
        std::optional<SplitRule> best;
        double best_sse = 0.0;
        for (const std::size_t j : candidates) {
            const auto split = best_split_sse_rows(data.column(j).data(), data.response().data(),
                                                   weights, rows, scratch);
            // Strict improvement keeps the smallest variable index on ties.
            if (split && (!best || split->sse_after < best_sse)) {
                best = SplitRule{j, split->cut};
                best_sse = split->sse_after;
            }
        }
        return best;
    }
};

}  // namespace detail

/// Best SSE-reducing cut for one feature column, considering only
/// observations with w > 0. Returns nullopt when fewer than two distinct
/// active values exist.
inline std::optional<SseSplit> best_split_sse(std::span<const double> x,
                                              std::span<const double> y,
                                              const ResampleCounts& w) {
    if (x.size() != y.size() || x.size() != w.counts.size()) {
        throw ValidationError("best_split_sse: column, response and weights must have equal length");
    }
    std::vector<std::uint32_t> rows;
    for (std::size_t i = 0; i < w.counts.size(); ++i) {
        if (w.counts[i] > 0) {
            rows.push_back(static_cast<std::uint32_t>(i));
        }
    }
    detail::SplitScratch scratch;
    return detail::best_split_sse_rows(x.data(), y.data(), w.counts.data(), rows, scratch);
}

/// CART regression tree on count-weighted data: at each node an mtry-sized
/// random variable subset is searched exhaustively for the split with the
/// smallest weighted SSE. Ties break to the smallest variable index, then
/// the smallest cut.
inline TreeModel fit_cart(const Dataset& data, const ResampleCounts& w, std::size_t mtry,
                          std::size_t min_node_size, Rng& rng) {
    detail::TreeGrowParams params{mtry, min_node_size};
    detail::CartChooser chooser{data, w.counts.data()};
    return detail::grow_tree(data, w, params, TreeType::cart, rng, chooser);
}

}  // namespace rfvar

#endif  // RFVAR_CART_HPP
