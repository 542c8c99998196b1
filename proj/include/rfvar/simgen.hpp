#ifndef RFVAR_SIMGEN_HPP
#define RFVAR_SIMGEN_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rfvar/common.hpp"
#include "rfvar/dataset.hpp"
#include "rfvar/random.hpp"

namespace rfvar {

/// The eleven synthetic outcome functions. SUM* sums predictors, SQ* sums
/// squares, OR* multiplies indicators, AND* averages indicators. Note the
/// published SQ5 has four squared terms and AND5 four indicator terms over
/// five; both are implemented verbatim, names notwithstanding.
enum class SimFunction { sum1, sum3, sum5, sq1, sq3, sq5, or1, or3, or5, and3, and5 };

inline constexpr std::array<SimFunction, 11> kAllSimFunctions = {
    SimFunction::sum1, SimFunction::sum3, SimFunction::sum5, SimFunction::sq1,
    SimFunction::sq3,  SimFunction::sq5,  SimFunction::or1,  SimFunction::or3,
    SimFunction::or5,  SimFunction::and3, SimFunction::and5};

inline constexpr std::size_t kSimPredictors = 10;

inline std::string to_string(SimFunction f) {
    switch (f) {
        case SimFunction::sum1: return "SUM1";
        case SimFunction::sum3: return "SUM3";
        case SimFunction::sum5: return "SUM5";
        case SimFunction::sq1: return "SQ1";
        case SimFunction::sq3: return "SQ3";
        case SimFunction::sq5: return "SQ5";
        case SimFunction::or1: return "OR1";
        case SimFunction::or3: return "OR3";
        case SimFunction::or5: return "OR5";
        case SimFunction::and3: return "AND3";
        case SimFunction::and5: return "AND5";
    }
    throw ValidationError("invalid simulation function");
}

inline std::string valid_sim_function_names() {
    std::string names;
    for (const auto f : kAllSimFunctions) {
        if (!names.empty()) {
            names += ", ";
        }
        names += to_string(f);
    }
    return names;
}

inline SimFunction parse_sim_function(const std::string& text) {
    for (const auto f : kAllSimFunctions) {
        if (to_string(f) == text) {
            return f;
        }
    }
    throw ValidationError("unknown simulation function '" + text +
                          "' (valid: " + valid_sim_function_names() + ")");
}

/// Ordinal used when deriving per-function rng streams; stable across runs.
inline std::uint64_t sim_function_ordinal(SimFunction f) {
    for (std::size_t i = 0; i < kAllSimFunctions.size(); ++i) {
        if (kAllSimFunctions[i] == f) {
            return i;
        }
    }
    throw ValidationError("invalid simulation function");
}

struct SimulationSpec {
    SimFunction name = SimFunction::sum1;
    std::size_t n = 0;
    std::uint64_t seed = 0;
};

/// n rows of the ten predictors: columns 1-5 are standard normal, columns
/// 6-10 are normal with mean 10 and variance 5 (standard deviation sqrt 5).
/// Values are drawn row-major, so a fixed stream yields a fixed matrix.
inline std::vector<std::vector<double>> gen_predictors(std::size_t n, Rng& rng) {
    std::vector<std::vector<double>> rows(n);
    const double wide_sd = std::sqrt(5.0);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i].resize(kSimPredictors);
        for (std::size_t j = 0; j < kSimPredictors; ++j) {
            const double z = rng.next_normal();
            rows[i][j] = j < 5 ? z : 10.0 + wide_sd * z;
        }
    }
    return rows;
}

/// Deterministic outcome for one predictor row (no noise term is added).
inline double apply_function(SimFunction name, std::span<const double> x) {
    if (x.size() != kSimPredictors) {
        throw ValidationError("apply_function expects a length-10 vector");
    }
    const auto ind = [](bool cond) { return cond ? 1.0 : 0.0; };
    // x is 0-based; the formulas below index predictors 1-based.
    switch (name) {
        case SimFunction::sum1:
            return x[0];
        case SimFunction::sum3:
            return x[0] + x[2] + x[4];
        case SimFunction::sum5:
            return x[0] + x[2] + x[4] + x[5] + x[6];
        case SimFunction::sq1:
            return x[0] * x[0];
        case SimFunction::sq3:
            return x[0] * x[0] + x[2] * x[2] + x[4] * x[4];
        case SimFunction::sq5:
            return x[0] * x[0] + x[2] * x[2] + x[4] * x[4] + x[5] * x[5];
        case SimFunction::or1:
            return ind(x[0] > 0.4);
        case SimFunction::or3:
            return ind(x[0] > 0.4) * ind(x[2] > 0.6) * ind(x[4] > 0.4);
        case SimFunction::or5:
            return ind(x[0] > 0.4) * ind(x[1] > 0.6) * ind(x[2] > 0.4) * ind(x[4] > 0.4) *
                   ind(x[5] > 6.0);
        case SimFunction::and3:
            return (ind(x[0] > 0.4) + ind(x[1] > 0.6) + ind(x[2] > 0.4)) / 3.0;
        case SimFunction::and5:
            return (ind(x[0] > 0.4) + ind(x[2] > 0.6) + ind(x[4] > 0.4) + ind(x[5] > 6.0)) / 5.0;
    }
    throw ValidationError("invalid simulation function");
}

/// Predictors plus the per-row synthetic outcome, deterministic in the seed.
inline Dataset gen_dataset(const SimulationSpec& spec) {
    if (spec.n < 2) {
        throw ValidationError("gen_dataset: n must be >= 2");
    }
    Rng rng(spec.seed);
    const auto rows = gen_predictors(spec.n, rng);
    std::vector<std::vector<double>> columns(kSimPredictors, std::vector<double>(spec.n));
    std::vector<double> response(spec.n);
    for (std::size_t i = 0; i < spec.n; ++i) {
        for (std::size_t j = 0; j < kSimPredictors; ++j) {
            columns[j][i] = rows[i][j];
        }
        response[i] = apply_function(spec.name, rows[i]);
    }
    return Dataset(std::move(columns), std::move(response));
}

}  // namespace rfvar

#endif  // RFVAR_SIMGEN_HPP
