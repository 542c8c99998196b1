#ifndef RFVAR_RESAMPLING_HPP
#define RFVAR_RESAMPLING_HPP

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "rfvar/common.hpp"
#include "rfvar/random.hpp"

namespace rfvar {

enum class ResampleMode { bootstrap, subsample };

inline std::string to_string(ResampleMode mode) {
    return mode == ResampleMode::bootstrap ? "bootstrap" : "subsample";
}

inline ResampleMode parse_resample_mode(const std::string& text) {
    if (text == "bootstrap") {
        return ResampleMode::bootstrap;
    }
    if (text == "subsample") {
        return ResampleMode::subsample;
    }
    throw ValidationError("unknown resample mode '" + text + "' (valid: bootstrap, subsample)");
}

/// One tree's resample as a count vector: counts[i] is how often training
/// observation i appears. The count representation (rather than an index
/// list) is what the variance estimator consumes directly.
///
/// Mode invariants, checked on every construction:
///   bootstrap: sum(counts) == n (s == n, counts may exceed 1)
///   subsample: counts are 0/1 and sum(counts) == s (without replacement)
struct ResampleCounts {
    std::vector<std::uint32_t> counts;
    ResampleMode mode = ResampleMode::bootstrap;
    std::size_t s = 0;  // intended resample size; equals n for bootstrap

    ResampleCounts(std::vector<std::uint32_t> counts_in, ResampleMode mode_in, std::size_t s_in)
        : counts(std::move(counts_in)), mode(mode_in), s(s_in) {
        if (counts.empty()) {
            throw ValidationError("resample counts must not be empty");
        }
        std::uint64_t total = 0;
        std::uint32_t max_count = 0;
        for (const auto c : counts) {
            total += c;
            max_count = std::max(max_count, c);
        }
        if (mode == ResampleMode::bootstrap) {
            if (s != counts.size() || total != counts.size()) {
                throw ValidationError("bootstrap counts must sum to n");
            }
        } else {
            if (total != s || max_count > 1) {
                throw ValidationError("subsample counts must be 0/1 and sum to s");
            }
        }
    }

    std::size_t n() const { return counts.size(); }
    std::uint64_t total() const {
        return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
    }

    bool operator==(const ResampleCounts&) const = default;
};

/// Tally of n independent uniform draws from {0..n-1} (sampling with
/// replacement at the full sample size).
inline ResampleCounts bootstrap_counts(std::size_t n, Rng& rng) {
    if (n == 0) {
        throw ValidationError("bootstrap_counts: n must be >= 1");
    }
    std::vector<std::uint32_t> counts(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        ++counts[rng.next_below(n)];
    }
    return ResampleCounts(std::move(counts), ResampleMode::bootstrap, n);
}

/// Exactly s distinct indices chosen uniformly without replacement
/// (partial Fisher-Yates shuffle).
inline ResampleCounts subsample_counts(std::size_t n, std::size_t s, Rng& rng) {
    if (s == 0 || s > n) {
        throw ValidationError("subsample_counts: need 1 <= s <= n, got s=" + std::to_string(s) +
                              ", n=" + std::to_string(n));
    }
    std::vector<std::uint32_t> pool(n);
    std::iota(pool.begin(), pool.end(), 0);
    std::vector<std::uint32_t> counts(n, 0);
    for (std::size_t i = 0; i < s; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
        std::swap(pool[i], pool[j]);
        counts[pool[i]] = 1;
    }
    return ResampleCounts(std::move(counts), ResampleMode::subsample, s);
}

/// Default subsample size n^0.7, rounded to nearest with ties up. Flooring
/// would give 40 at n=200 instead of the intended 41.
inline std::size_t default_subsample_size(std::size_t n) {
    if (n < 2) {
        throw ValidationError("default_subsample_size: n must be >= 2");
    }
    return static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 0.7) + 0.5));
}

}  // namespace rfvar

#endif  // RFVAR_RESAMPLING_HPP
