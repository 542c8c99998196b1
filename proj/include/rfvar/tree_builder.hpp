#ifndef RFVAR_TREE_BUILDER_HPP
#define RFVAR_TREE_BUILDER_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "rfvar/dataset.hpp"
#include "rfvar/random.hpp"
#include "rfvar/resampling.hpp"
#include "rfvar/tree.hpp"

namespace rfvar::detail {

/// Candidate cut between two consecutive distinct values: the midpoint,
/// nudged back to `lo` if rounding lands it on `hi` (the cut must route
/// lo left and hi right).
inline double split_midpoint(double lo, double hi) {
    double cut = lo + (hi - lo) * 0.5;
    if (!(cut < hi)) {
        cut = lo;
    }
    if (cut < lo) {
        cut = lo;
    }
    return cut;
}

/// Per-builder scratch, reused across nodes to keep allocations off the
/// split-search path.
struct SplitScratch {
    std::vector<std::pair<double, std::uint32_t>> order;  // (x value, row), sorted
    std::vector<std::uint32_t> part;                      // partition buffer
    std::vector<std::uint32_t> var_pool;                  // mtry sampling pool
    std::vector<std::size_t> vars;                        // sampled candidate variables
};

/// mtry distinct variables from {0..p-1} via partial Fisher-Yates, returned
/// ascending so candidate evaluation order (and therefore tie-breaking by
/// smallest variable index) is deterministic.
inline std::span<const std::size_t> sample_variables(std::size_t p, std::size_t mtry, Rng& rng,
                                                     SplitScratch& scratch) {
    auto& pool = scratch.var_pool;
    pool.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
        pool[j] = static_cast<std::uint32_t>(j);
    }
    scratch.vars.clear();
    for (std::size_t i = 0; i < mtry; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(p - i));
        std::swap(pool[i], pool[j]);
        scratch.vars.push_back(pool[i]);
    }
    std::sort(scratch.vars.begin(), scratch.vars.end());
    return scratch.vars;
}

inline double weighted_node_total(std::span<const std::uint32_t> rows,
                                  const std::uint32_t* weights) {
    double total = 0.0;
    for (const auto r : rows) {
        total += weights[r];
    }
    return total;
}

inline bool node_is_pure(std::span<const std::uint32_t> rows, const double* y) {
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (y[rows[i]] != y[rows[0]]) {
            return false;
        }
    }
    return true;
}

inline double weighted_mean(std::span<const std::uint32_t> rows, const double* y,
                            const std::uint32_t* weights) {
    KahanSum num;
    double den = 0.0;
    for (const auto r : rows) {
        num.add(static_cast<double>(weights[r]) * y[r]);
        den += weights[r];
    }
    return num.value() / den;
}

struct TreeGrowParams {
    std::size_t mtry = 1;
    std::size_t min_node_size = 5;
};

/// Shared recursive grower. `Chooser` maps (active rows, candidate
/// variables, scratch) to an optional SplitRule; a nullopt turns the node
/// into a leaf. Stops when the weighted observation count drops below
/// 2 * min_node_size or the node is pure. Rows are partitioned stably so
/// the build is fully deterministic for a fixed rng stream.
template <typename Chooser>
TreeModel grow_tree(const Dataset& data, const ResampleCounts& resample,
                    const TreeGrowParams& params, TreeType learner, Rng& rng, Chooser&& choose) {
    const std::size_t n = data.n();
    const std::size_t p = data.p();
    if (resample.counts.size() != n) {
        throw ValidationError("resample counts length does not match dataset rows");
    }
    if (params.mtry < 1 || params.mtry > p) {
        throw ValidationError("mtry must be in [1, p], got " + std::to_string(params.mtry));
    }
    if (params.min_node_size < 1) {
        throw ValidationError("min_node_size must be >= 1");
    }
    if (resample.total() < 2) {
        throw ValidationError("resample must cover at least 2 observations");
    }

    const double* y = data.response().data();
    const std::uint32_t* w = resample.counts.data();

    std::vector<std::uint32_t> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (w[i] > 0) {
            rows.push_back(static_cast<std::uint32_t>(i));
        }
    }

    TreeModel tree;
    tree.p = p;
    tree.learner = learner;
    SplitScratch scratch;

    const double min_split_weight = 2.0 * static_cast<double>(params.min_node_size);

    // Recursive build over rows[begin, end); children are appended after
    // their parent, yielding preorder storage.
    auto build = [&](auto&& self, std::size_t begin, std::size_t end) -> std::int64_t {
        const std::int64_t index = static_cast<std::int64_t>(tree.nodes.size());
        tree.nodes.emplace_back();
        const std::span<const std::uint32_t> node_rows(rows.data() + begin, end - begin);

        auto make_leaf = [&] {
            tree.nodes[index].prediction = weighted_mean(node_rows, y, w);
            return index;
        };

        if (weighted_node_total(node_rows, w) < min_split_weight || node_is_pure(node_rows, y)) {
            return make_leaf();
        }

        const auto candidates = sample_variables(p, params.mtry, rng, scratch);
        const std::optional<SplitRule> rule = choose(node_rows, candidates, scratch);
        if (!rule) {
            return make_leaf();
        }

        // Stable partition into left | right within [begin, end).
        auto& part = scratch.part;
        part.clear();
        std::size_t mid = begin;
        const double* x = data.column(rule->variable).data();
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t r = rows[i];
            if (x[r] <= rule->cut) {
                rows[mid++] = r;
            } else {
                part.push_back(r);
            }
        }
        std::copy(part.begin(), part.end(), rows.begin() + mid);

        if (mid == begin || mid == end) {
            // Midpoint cuts over distinct active values always separate;
            // reaching this means the chooser returned a degenerate rule.
            return make_leaf();
        }

        tree.nodes[index].rule = *rule;
        tree.nodes[index].left = self(self, begin, mid);
        tree.nodes[index].right = self(self, mid, end);
        return index;
    };

    build(build, 0, rows.size());
    return tree;
}

}  // namespace rfvar::detail

#endif  // RFVAR_TREE_BUILDER_HPP
