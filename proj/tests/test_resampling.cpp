#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "rfvar/resampling.hpp"

using rfvar::ResampleCounts;
using rfvar::ResampleMode;
using rfvar::Rng;

TEST_CASE("bootstrap counts sum to n", "[resampling]") {
    SECTION("n = 1 has only one possible outcome") {
        Rng rng(1);
        const auto counts = rfvar::bootstrap_counts(1, rng);
        CHECK(counts.counts == std::vector<std::uint32_t>{1});
    }
    SECTION("random sizes and seeds") {
        Rng rng(99);
        for (int trial = 0; trial < 50; ++trial) {
            const std::size_t n = 1 + rng.next_below(300);
            Rng draw(rng.next_u64());
            const auto counts = rfvar::bootstrap_counts(n, draw);
            CHECK(counts.total() == n);
            CHECK(counts.mode == ResampleMode::bootstrap);
            CHECK(counts.s == n);
        }
    }
    SECTION("n = 0 is rejected") {
        Rng rng(1);
        CHECK_THROWS_AS(rfvar::bootstrap_counts(0, rng), rfvar::ValidationError);
    }
}

TEST_CASE("bootstrap resamples keep about 0.632n distinct observations", "[resampling]") {
    const std::size_t n = 100;
    const int resamples = 10000;
    Rng rng(2024);
    double distinct_total = 0.0;
    for (int trial = 0; trial < resamples; ++trial) {
        const auto counts = rfvar::bootstrap_counts(n, rng);
        int distinct = 0;
        for (const auto c : counts.counts) {
            distinct += c > 0 ? 1 : 0;
        }
        distinct_total += static_cast<double>(distinct) / static_cast<double>(n);
    }
    const double mean_fraction = distinct_total / resamples;
    CHECK(mean_fraction == Catch::Approx(0.632).margin(0.01));
}

TEST_CASE("subsample counts are 0/1 and sum to s", "[resampling]") {
    SECTION("s = n selects everything") {
        Rng rng(5);
        const auto counts = rfvar::subsample_counts(5, 5, rng);
        CHECK(counts.counts == std::vector<std::uint32_t>(5, 1));
    }
    SECTION("the table-size case n=200, s=41") {
        Rng rng(7);
        const auto counts = rfvar::subsample_counts(200, 41, rng);
        CHECK(counts.total() == 41);
        CHECK(*std::max_element(counts.counts.begin(), counts.counts.end()) == 1);
    }
    SECTION("invalid sizes are rejected") {
        Rng rng(1);
        CHECK_THROWS_AS(rfvar::subsample_counts(10, 0, rng), rfvar::ValidationError);
        CHECK_THROWS_AS(rfvar::subsample_counts(10, 11, rng), rfvar::ValidationError);
    }
}

TEST_CASE("subsample inclusion frequency matches s/n", "[resampling]") {
    const std::size_t n = 10, s = 3;
    const int resamples = 10000;
    Rng rng(31);
    std::vector<int> hits(n, 0);
    for (int trial = 0; trial < resamples; ++trial) {
        const auto counts = rfvar::subsample_counts(n, s, rng);
        for (std::size_t i = 0; i < n; ++i) {
            hits[i] += counts.counts[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double frequency = static_cast<double>(hits[i]) / resamples;
        CHECK(frequency == Catch::Approx(0.3).margin(0.02));
    }
}

TEST_CASE("default subsample size reproduces the published table", "[resampling]") {
    CHECK(rfvar::default_subsample_size(200) == 41);
    CHECK(rfvar::default_subsample_size(1000) == 126);
    CHECK(rfvar::default_subsample_size(5000) == 388);
    CHECK_THROWS_AS(rfvar::default_subsample_size(1), rfvar::ValidationError);
}

TEST_CASE("identical seeds give identical resamples", "[resampling]") {
    for (const std::uint64_t seed : {1ULL, 42ULL, 987654321ULL}) {
        Rng a(seed), b(seed);
        CHECK(rfvar::bootstrap_counts(64, a) == rfvar::bootstrap_counts(64, b));
        Rng c(seed), d(seed);
        CHECK(rfvar::subsample_counts(64, 17, c) == rfvar::subsample_counts(64, 17, d));
    }
}

TEST_CASE("count vectors reject mode-invariant violations", "[resampling]") {
    CHECK_THROWS_AS(ResampleCounts({1, 2}, ResampleMode::bootstrap, 2),
                    rfvar::ValidationError);  // sums to 3, not n=2
    CHECK_THROWS_AS(ResampleCounts({2, 0}, ResampleMode::subsample, 2),
                    rfvar::ValidationError);  // subsample counts must be 0/1
    CHECK_THROWS_AS(ResampleCounts({1, 0}, ResampleMode::subsample, 2),
                    rfvar::ValidationError);  // sums to 1, not s=2
    CHECK_THROWS_AS(ResampleCounts({}, ResampleMode::bootstrap, 0), rfvar::ValidationError);
    CHECK_NOTHROW(ResampleCounts({1, 1}, ResampleMode::bootstrap, 2));
    CHECK_NOTHROW(ResampleCounts({0, 1}, ResampleMode::subsample, 1));
}
