#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "rfvar/dataset.hpp"
#include "rfvar/random.hpp"

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("rfvar_dataset_" + name);
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::trunc);
    out << content;
}

}  // namespace

TEST_CASE("load_csv extracts the response and keeps feature order", "[dataset]") {
    const auto path = temp_path("basic.csv");
    write_file(path, "x1,x2,y\n1,4,7\n2,5,8\n3,6,9\n");
    const rfvar::Dataset data = rfvar::load_csv(path.string(), "y");
    CHECK(data.n() == 3);
    CHECK(data.p() == 2);
    CHECK(data.column_names() == std::vector<std::string>{"x1", "x2"});
    CHECK(data.response_name() == "y");
    CHECK(data.column(0)[1] == 2.0);
    CHECK(data.column(1)[2] == 6.0);
    CHECK(data.response()[0] == 7.0);
}

TEST_CASE("load_csv keeps a non-alphabetical column order", "[dataset]") {
    const auto path = temp_path("order.csv");
    write_file(path, "b,a,y\n1,2,3\n4,5,6\n");
    const rfvar::Dataset data = rfvar::load_csv(path.string(), "y");
    CHECK(data.column_names() == std::vector<std::string>{"b", "a"});
}

TEST_CASE("load_csv also extracts a response column in the middle", "[dataset]") {
    const auto path = temp_path("middle.csv");
    write_file(path, "x1,y,x2\n1,10,2\n3,20,4\n");
    const rfvar::Dataset data = rfvar::load_csv(path.string(), "y");
    CHECK(data.column_names() == std::vector<std::string>{"x1", "x2"});
    CHECK(data.response()[1] == 20.0);
    CHECK(data.column(1)[0] == 2.0);
}

TEST_CASE("load_csv error paths", "[dataset]") {
    SECTION("missing file") {
        CHECK_THROWS_AS(rfvar::load_csv("/no/such/file.csv", "y"), rfvar::ValidationError);
    }
    SECTION("NaN cell names its row and column") {
        const auto path = temp_path("nan.csv");
        write_file(path, "x1,y\n1,2\nNaN,4\n");
        CHECK_THROWS_WITH(rfvar::load_csv(path.string(), "y"),
                          Catch::Matchers::ContainsSubstring("row 2") &&
                              Catch::Matchers::ContainsSubstring("x1"));
    }
    SECTION("unparseable cell names its row and column") {
        const auto path = temp_path("garbage.csv");
        write_file(path, "x1,y\n1,2\n3,zebra\n");
        CHECK_THROWS_WITH(rfvar::load_csv(path.string(), "y"),
                          Catch::Matchers::ContainsSubstring("row 2") &&
                              Catch::Matchers::ContainsSubstring("'y'"));
    }
    SECTION("absent response column") {
        const auto path = temp_path("nores.csv");
        write_file(path, "x1,x2\n1,2\n3,4\n");
        CHECK_THROWS_WITH(rfvar::load_csv(path.string(), "y"),
                          Catch::Matchers::ContainsSubstring("response column 'y'"));
    }
    SECTION("fewer than two rows") {
        const auto path = temp_path("short.csv");
        write_file(path, "x1,y\n1,2\n");
        CHECK_THROWS_WITH(rfvar::load_csv(path.string(), "y"),
                          Catch::Matchers::ContainsSubstring("at least 2"));
    }
    SECTION("ragged row") {
        const auto path = temp_path("ragged.csv");
        write_file(path, "x1,y\n1,2\n3\n");
        CHECK_THROWS_AS(rfvar::load_csv(path.string(), "y"), rfvar::ValidationError);
    }
    SECTION("duplicate column names") {
        const auto path = temp_path("dup.csv");
        write_file(path, "x1,x1,y\n1,2,3\n4,5,6\n");
        CHECK_THROWS_AS(rfvar::load_csv(path.string(), "y"), rfvar::ValidationError);
    }
}

TEST_CASE("save_csv writes compact exact decimals", "[dataset]") {
    const rfvar::Dataset data({{0.5}}, {1.0});
    const auto path = temp_path("tiny.csv");
    rfvar::save_csv(data, path.string());
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(content == "x1,y\n0.5,1\n");
}

TEST_CASE("save_csv to an unwritable path is an I/O error", "[dataset]") {
    const rfvar::Dataset data({{0.5, 1.5}}, {1.0, 2.0});
    CHECK_THROWS_AS(rfvar::save_csv(data, "/no/such/dir/out.csv"), rfvar::IoError);
}

TEST_CASE("save then load round-trips bit-exactly", "[dataset]") {
    rfvar::Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.next_below(15);
        const std::size_t p = 1 + rng.next_below(4);
        std::vector<std::vector<double>> columns(p, std::vector<double>(n));
        std::vector<double> response(n);
        for (std::size_t j = 0; j < p; ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                // Mix scales so shortest-representation printing gets exercised.
                columns[j][i] = rng.next_normal() * std::pow(10.0, double(rng.next_below(20)) - 10.0);
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            response[i] = rng.next_normal() / 3.0;
        }
        const rfvar::Dataset original(std::move(columns), std::move(response));
        const auto path = temp_path("roundtrip.csv");
        rfvar::save_csv(original, path.string());
        const rfvar::Dataset loaded = rfvar::load_csv(path.string(), "y");
        REQUIRE(loaded == original);
    }
}

TEST_CASE("dataset construction validates shapes and finiteness", "[dataset]") {
    CHECK_THROWS_AS(rfvar::Dataset({}, {1.0}), rfvar::ValidationError);
    CHECK_THROWS_AS(rfvar::Dataset({{1.0, 2.0}}, {1.0}), rfvar::ValidationError);
    CHECK_THROWS_AS(rfvar::Dataset({{1.0, std::nan("")}}, {1.0, 2.0}), rfvar::ValidationError);
    CHECK_THROWS_AS(rfvar::Dataset({{1.0, 2.0}}, {1.0, INFINITY}), rfvar::ValidationError);
    CHECK_THROWS_AS(rfvar::Dataset({{1.0}}, {1.0}, {"a", "b"}), rfvar::ValidationError);
}
