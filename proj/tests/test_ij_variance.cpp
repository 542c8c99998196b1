#include <catch2/catch_amalgamated.hpp>

#include <vector>

#include "oracles.hpp"
#include "rfvar/forest.hpp"
#include "rfvar/ij_variance.hpp"
#include "rfvar/simgen.hpp"

using rfvar::BiasCorrection;
using rfvar::Dataset;
using rfvar::ForestConfig;
using rfvar::ForestModel;
using rfvar::ResampleMode;
using rfvar::Rng;
using rfvar::TreeType;

namespace {

/// Forest of single-leaf trees with prescribed predictions and counts, for
/// hand-checkable estimator fixtures.
ForestModel leaf_forest(const std::vector<double>& predictions,
                        const std::vector<std::vector<std::uint32_t>>& counts, ResampleMode mode,
                        std::size_t s) {
    ForestModel model;
    model.n = counts.front().size();
    model.p = 1;
    model.column_names = {"x1"};
    model.response_name = "y";
    model.config.resample = mode;
    model.config.tree_count = predictions.size();
    model.config.subsample_size = mode == ResampleMode::bootstrap ? model.n : s;
    for (std::size_t b = 0; b < predictions.size(); ++b) {
        rfvar::TreeModel tree;
        tree.p = 1;
        tree.nodes.push_back(rfvar::TreeNode{{}, -1, -1, predictions[b]});
        model.trees.push_back(tree);
        model.counts.emplace_back(std::vector<std::uint32_t>(counts[b]), mode,
                                  mode == ResampleMode::bootstrap ? model.n : s);
    }
    return model;
}

/// Naive reference: C_i = (1/B) sum_b (N_bi - e)(T_b - mean), raw = sum C^2.
double naive_raw(const std::vector<std::vector<std::uint32_t>>& counts,
                 const std::vector<double>& preds, double e) {
    const std::size_t B = preds.size();
    const std::size_t n = counts.front().size();
    long double mean = 0.0L;
    for (const auto v : preds) {
        mean += v;
    }
    mean /= static_cast<long double>(B);
    long double raw = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        long double ci = 0.0L;
        for (std::size_t b = 0; b < B; ++b) {
            ci += (static_cast<long double>(counts[b][i]) - e) * (preds[b] - mean);
        }
        ci /= static_cast<long double>(B);
        raw += ci * ci;
    }
    return static_cast<double>(raw);
}

/// Textbook covariance variant with the empirical inclusion mean per i.
double textbook_raw(const std::vector<std::vector<std::uint32_t>>& counts,
                    const std::vector<double>& preds) {
    const std::size_t B = preds.size();
    const std::size_t n = counts.front().size();
    long double mean = 0.0L;
    for (const auto v : preds) {
        mean += v;
    }
    mean /= static_cast<long double>(B);
    long double raw = 0.0L;
    for (std::size_t i = 0; i < n; ++i) {
        long double count_mean = 0.0L;
        for (std::size_t b = 0; b < B; ++b) {
            count_mean += counts[b][i];
        }
        count_mean /= static_cast<long double>(B);
        long double ci = 0.0L;
        for (std::size_t b = 0; b < B; ++b) {
            ci += (static_cast<long double>(counts[b][i]) - count_mean) * (preds[b] - mean);
        }
        ci /= static_cast<long double>(B);
        raw += ci * ci;
    }
    return static_cast<double>(raw);
}

}  // namespace

TEST_CASE("identical tree predictions give zero variance", "[ij]") {
    const auto forest =
        leaf_forest({2.0, 2.0, 2.0}, {{1, 0}, {0, 1}, {1, 0}}, ResampleMode::subsample, 1);
    const std::vector<double> x{0.0};
    const auto estimate = rfvar::ij_variance(forest, x);
    CHECK(estimate.raw == 0.0);
    CHECK(estimate.correction == 0.0);
    CHECK(estimate.corrected == 0.0);
}

TEST_CASE("the n=2 subsample hand fixture evaluates exactly", "[ij]") {
    const auto forest = leaf_forest({1.0, 3.0}, {{1, 0}, {0, 1}}, ResampleMode::subsample, 1);
    const std::vector<double> x{0.0};
    const auto estimate = rfvar::ij_variance(forest, x);
    CHECK(estimate.raw == Catch::Approx(0.5).margin(1e-12));
    CHECK(estimate.correction == Catch::Approx(0.25).margin(1e-12));
    CHECK(estimate.corrected == Catch::Approx(0.25).margin(1e-12));
    CHECK(estimate.tree_count == 2);
    CHECK(estimate.estimator == rfvar::VarianceEstimator::infinitesimal_jackknife);
}

TEST_CASE("the n=2 jackknife-after-bootstrap hand fixture evaluates exactly", "[ij][jab]") {
    const auto forest = leaf_forest({1.0, 3.0}, {{2, 0}, {0, 2}}, ResampleMode::bootstrap, 2);
    const std::vector<double> x{0.0};
    const auto estimate = rfvar::jackknife_after_bootstrap(forest, x);
    CHECK(estimate.corrected == Catch::Approx(1.0).margin(1e-12));
    CHECK(estimate.correction == 0.0);
    CHECK(estimate.raw == estimate.corrected);
    CHECK(estimate.estimator == rfvar::VarianceEstimator::jackknife_after_bootstrap);
}

TEST_CASE("jackknife-after-bootstrap matches an independent reimplementation", "[ij][jab]") {
    const Dataset data = rfvar::gen_dataset({rfvar::SimFunction::sum3, 30, 41});
    ForestConfig config;
    config.tree_count = 500;
    config.mtry = 3;
    config.seed = 7;
    const auto forest = rfvar::fit_forest(data, config, 2);

    Rng rng(12);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> x(10);
        for (auto& v : x) {
            v = rng.next_normal();
        }
        const auto per_tree = rfvar::predict_per_tree(forest, x);
        std::vector<std::vector<std::uint32_t>> counts;
        for (const auto& c : forest.counts) {
            counts.push_back(c.counts);
        }
        const double expected = oracle::jackknife_after_bootstrap(counts, per_tree);
        const auto estimate = rfvar::jackknife_after_bootstrap(forest, x);
        CHECK(estimate.corrected == Catch::Approx(expected).epsilon(1e-10).margin(1e-14));
    }
}

TEST_CASE("jackknife-after-bootstrap rejects unusable forests", "[ij][jab]") {
    SECTION("subsample forests are not accepted") {
        const auto forest = leaf_forest({1.0, 3.0}, {{1, 0}, {0, 1}}, ResampleMode::subsample, 1);
        const std::vector<double> x{0.0};
        CHECK_THROWS_AS(rfvar::jackknife_after_bootstrap(forest, x), rfvar::ValidationError);
    }
    SECTION("an observation contained in every resample is reported") {
        const auto forest = leaf_forest({1.0, 3.0}, {{2, 0}, {1, 1}}, ResampleMode::bootstrap, 2);
        const std::vector<double> x{0.0};
        CHECK_THROWS_WITH(rfvar::jackknife_after_bootstrap(forest, x),
                          Catch::Matchers::ContainsSubstring("observation 0"));
    }
}

TEST_CASE("ij_variance needs at least two trees and stored counts", "[ij]") {
    const auto forest = leaf_forest({1.0}, {{1, 0}}, ResampleMode::subsample, 1);
    const std::vector<double> x{0.0};
    CHECK_THROWS_AS(rfvar::ij_variance(forest, x), rfvar::ValidationError);
}

TEST_CASE("raw matches a naive covariance loop and, on balanced counts, the textbook form",
          "[ij]") {
    SECTION("balanced fixture: every pair of n=4 once, so mean inclusion is exactly s/n") {
        const std::vector<std::vector<std::uint32_t>> counts{
            {1, 1, 0, 0}, {1, 0, 1, 0}, {1, 0, 0, 1}, {0, 1, 1, 0}, {0, 1, 0, 1}, {0, 0, 1, 1}};
        const std::vector<double> preds{0.5, -1.25, 2.0, 3.5, 1.0, -0.75};
        const auto forest = leaf_forest(preds, counts, ResampleMode::subsample, 2);
        const std::vector<double> x{0.0};
        const auto estimate = rfvar::ij_variance(forest, x, BiasCorrection::none);
        const double direct = naive_raw(counts, preds, 0.5);
        const double textbook = textbook_raw(counts, preds);
        CHECK(estimate.raw == Catch::Approx(direct).epsilon(1e-10));
        CHECK(estimate.raw == Catch::Approx(textbook).epsilon(1e-10));
    }
    SECTION("random bootstrap forest against the naive loop") {
        const Dataset data = rfvar::gen_dataset({rfvar::SimFunction::sq1, 25, 3});
        ForestConfig config;
        config.tree_count = 200;
        config.mtry = 5;
        config.seed = 17;
        const auto forest = rfvar::fit_forest(data, config, 2);
        std::vector<std::vector<std::uint32_t>> counts;
        for (const auto& c : forest.counts) {
            counts.push_back(c.counts);
        }
        Rng rng(5);
        std::vector<double> x(10);
        for (auto& v : x) {
            v = rng.next_normal();
        }
        const auto per_tree = rfvar::predict_per_tree(forest, x);
        std::vector<double> preds(per_tree.begin(), per_tree.end());
        const auto estimate = rfvar::ij_variance(forest, x, BiasCorrection::none);
        CHECK(estimate.raw == Catch::Approx(naive_raw(counts, preds, 1.0)).epsilon(1e-10));
    }
}

TEST_CASE("scaling the responses scales the variance estimates quadratically", "[ij]") {
    for (const auto tree_type : {TreeType::cart, TreeType::ci}) {
        const Dataset data = rfvar::gen_dataset({rfvar::SimFunction::sum3, 60, 29});
        std::vector<std::vector<double>> columns;
        for (std::size_t j = 0; j < data.p(); ++j) {
            columns.emplace_back(data.column(j).begin(), data.column(j).end());
        }
        std::vector<double> scaled(data.n());
        for (std::size_t i = 0; i < data.n(); ++i) {
            scaled[i] = 2.0 * data.response()[i];
        }
        const Dataset data2(std::move(columns), std::move(scaled));

        ForestConfig config;
        config.tree_type = tree_type;
        config.resample = ResampleMode::subsample;
        config.tree_count = 120;
        config.subsample_size = 18;
        config.mtry = 4;
        config.seed = 99;
        const auto forest1 = rfvar::fit_forest(data, config, 2);
        const auto forest2 = rfvar::fit_forest(data2, config, 2);

        Rng rng(31);
        for (int trial = 0; trial < 4; ++trial) {
            std::vector<double> x(10);
            for (auto& v : x) {
                v = rng.next_normal();
            }
            const auto e1 = rfvar::ij_variance(forest1, x);
            const auto e2 = rfvar::ij_variance(forest2, x);
            CHECK(e2.raw == Catch::Approx(4.0 * e1.raw).epsilon(1e-8).margin(1e-12));
            CHECK(e2.corrected ==
                  Catch::Approx(4.0 * e1.corrected).epsilon(1e-8).margin(1e-12));
        }
    }
}

TEST_CASE("the correction never increases the estimate", "[ij]") {
    const Dataset data = rfvar::gen_dataset({rfvar::SimFunction::sum1, 40, 13});
    for (const auto mode : {ResampleMode::bootstrap, ResampleMode::subsample}) {
        ForestConfig config;
        config.resample = mode;
        config.tree_count = 100;
        config.mtry = 3;
        config.seed = 3;
        const auto forest = rfvar::fit_forest(data, config, 2);
        Rng rng(9);
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> x(10);
            for (auto& v : x) {
                v = rng.next_normal();
            }
            const auto estimate = rfvar::ij_variance(forest, x);
            CHECK(estimate.correction >= 0.0);
            CHECK(estimate.corrected <= estimate.raw);
            CHECK(estimate.corrected == estimate.raw - estimate.correction);
        }
    }
}

TEST_CASE("a full-size subsample has zero eq5 correction", "[ij]") {
    const auto forest = leaf_forest({1.0, 2.0, 4.0}, {{1, 1}, {1, 1}, {1, 1}},
                                    ResampleMode::subsample, 2);
    const std::vector<double> x{0.0};
    const auto estimate = rfvar::ij_variance(forest, x, BiasCorrection::eq5);
    CHECK(estimate.correction == 0.0);
    CHECK(estimate.corrected == estimate.raw);
}

TEST_CASE("bias-correction variants compute the documented terms", "[ij]") {
    const Dataset data = rfvar::gen_dataset({rfvar::SimFunction::sum1, 30, 8});
    ForestConfig config;
    config.resample = ResampleMode::subsample;
    config.tree_count = 80;
    config.subsample_size = 10;
    config.mtry = 3;
    config.seed = 21;
    const auto forest = rfvar::fit_forest(data, config, 2);
    const std::vector<double> x(10, 0.1);

    const auto per_tree = rfvar::predict_per_tree(forest, x);
    long double mean = 0.0L, var = 0.0L;
    for (const auto v : per_tree) {
        mean += v;
    }
    mean /= static_cast<long double>(per_tree.size());
    for (const auto v : per_tree) {
        var += (v - mean) * (v - mean);
    }
    const double v_hat = static_cast<double>(var / static_cast<long double>(per_tree.size()));

    const auto none = rfvar::ij_variance(forest, x, BiasCorrection::none);
    CHECK(none.correction == 0.0);
    CHECK(none.corrected == none.raw);

    const auto eq5 = rfvar::ij_variance(forest, x, BiasCorrection::eq5);
    CHECK(eq5.correction ==
          Catch::Approx(10.0 * 20.0 / 30.0 * v_hat / 80.0).epsilon(1e-10));

    const auto boot = rfvar::ij_variance(forest, x, BiasCorrection::bootstrap);
    CHECK(boot.correction == Catch::Approx(30.0 * v_hat / 80.0).epsilon(1e-10));

    // mode_default on a subsample forest is the eq5 term
    const auto default_mode = rfvar::ij_variance(forest, x);
    CHECK(default_mode.correction == eq5.correction);

    // eq5 on a bootstrap forest vanishes because s = n
    ForestConfig boot_config = config;
    boot_config.resample = ResampleMode::bootstrap;
    boot_config.subsample_size = 0;
    const auto boot_forest = rfvar::fit_forest(data, boot_config, 2);
    const auto eq5_boot = rfvar::ij_variance(boot_forest, x, BiasCorrection::eq5);
    CHECK(eq5_boot.correction == 0.0);
}

TEST_CASE("corrected estimates stabilize as B grows while raw inflates", "[ij][montecarlo]") {
    const Dataset data = rfvar::gen_dataset({rfvar::SimFunction::sum1, 50, 1234});
    const std::vector<double> x(10, 0.25);

    double raw_small = 0.0, raw_large = 0.0;
    double corrected_small = 0.0, corrected_large = 0.0;
    const int seeds = 20;
    for (int seed = 1; seed <= seeds; ++seed) {
        ForestConfig config;
        config.resample = ResampleMode::subsample;
        config.subsample_size = 15;
        config.mtry = 3;
        config.seed = static_cast<std::uint64_t>(seed);

        config.tree_count = 250;
        const auto small = rfvar::fit_forest(data, config, 2);
        const auto estimate_small = rfvar::ij_variance(small, x);
        raw_small += estimate_small.raw;
        corrected_small += estimate_small.corrected;

        config.tree_count = 5000;
        const auto large = rfvar::fit_forest(data, config, 2);
        const auto estimate_large = rfvar::ij_variance(large, x);
        raw_large += estimate_large.raw;
        corrected_large += estimate_large.corrected;
    }
    raw_small /= seeds;
    raw_large /= seeds;
    corrected_small /= seeds;
    corrected_large /= seeds;

    CHECK(raw_small > raw_large);  // Monte Carlo inflation shrinks with B
    CHECK(std::abs(corrected_small - corrected_large) <= 0.10 * std::abs(corrected_large));
}

TEST_CASE("batch prediction equals the single-point calls bit-exactly", "[ij][batch]") {
    const Dataset data = rfvar::gen_dataset({rfvar::SimFunction::sum3, 40, 71});
    ForestConfig config;
    config.tree_count = 60;
    config.mtry = 3;
    config.seed = 15;
    const auto forest = rfvar::fit_forest(data, config, 2);

    SECTION("an empty batch yields an empty result") {
        const auto results = rfvar::predict_with_variance(forest, {});
        CHECK(results.empty());
    }

    SECTION("k = 1 equals the direct calls") {
        const std::vector<std::vector<double>> batch{std::vector<double>(10, 0.5)};
        const auto results = rfvar::predict_with_variance(forest, batch);
        REQUIRE(results.size() == 1);
        CHECK(results[0].prediction == rfvar::predict(forest, batch[0]));
        const auto direct = rfvar::ij_variance(forest, batch[0]);
        CHECK(results[0].variance.raw == direct.raw);
        CHECK(results[0].variance.corrected == direct.corrected);
    }

    SECTION("a batch of 100 equals 100 single calls") {
        Rng rng(3);
        std::vector<std::vector<double>> batch(100, std::vector<double>(10));
        for (auto& row : batch) {
            for (auto& v : row) {
                v = rng.next_normal();
            }
        }
        const auto results = rfvar::predict_with_variance(forest, batch, BiasCorrection::mode_default, 2);
        for (std::size_t k = 0; k < batch.size(); ++k) {
            CHECK(results[k].prediction == rfvar::predict(forest, batch[k]));
            const auto direct = rfvar::ij_variance(forest, batch[k]);
            CHECK(results[k].variance.raw == direct.raw);
            CHECK(results[k].variance.correction == direct.correction);
            CHECK(results[k].variance.corrected == direct.corrected);
        }
    }

    SECTION("width mismatches are rejected") {
        const std::vector<std::vector<double>> batch{std::vector<double>(9, 0.0)};
        CHECK_THROWS_AS(rfvar::predict_with_variance(forest, batch), rfvar::ValidationError);
    }
}
