#ifndef RFVAR_REPORT_HPP
#define RFVAR_REPORT_HPP

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rfvar/common.hpp"
#include "rfvar/dataset.hpp"
#include "rfvar/simgen.hpp"
#include "rfvar/tree.hpp"

namespace rfvar {

struct FigureRow {
    std::string distribution;
    std::size_t n = 0;
    std::size_t mtry = 0;
    std::string tree_type;
    std::string resample;
    double mapb = 0.0;
};

namespace detail {

inline std::size_t find_column(const std::vector<std::string>& names, const std::string& wanted,
                               const std::string& path) {
    for (std::size_t j = 0; j < names.size(); ++j) {
        if (names[j] == wanted) {
            return j;
        }
    }
    throw ValidationError("results file " + path + " is missing column '" + wanted + "'");
}

}  // namespace detail

/// Parses a results.csv emitted by the experiment runner; any structural
/// problem (missing column, bad number, unknown factor name) is a
/// validation error.
inline std::vector<FigureRow> load_results_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open results file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("empty results file: " + path);
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    const auto header = detail::split_csv_line(line);
    const std::size_t spec_col = detail::find_column(header, "spec", path);
    const std::size_t n_col = detail::find_column(header, "n", path);
    const std::size_t mtry_col = detail::find_column(header, "mtry", path);
    const std::size_t tree_col = detail::find_column(header, "tree_type", path);
    const std::size_t resample_col = detail::find_column(header, "resample", path);
    const std::size_t mapb_col = detail::find_column(header, "mapb", path);

    std::vector<FigureRow> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size()) {
            throw ValidationError("results file " + path + " line " + std::to_string(line_no) +
                                  " has " + std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(header.size()));
        }
        FigureRow row;
        row.distribution = cells[spec_col];
        parse_sim_function(row.distribution);  // unknown names are malformed input
        parse_tree_type(cells[tree_col]);
        parse_resample_mode(cells[resample_col]);
        row.tree_type = cells[tree_col];
        row.resample = cells[resample_col];
        try {
            row.n = static_cast<std::size_t>(std::stoull(cells[n_col]));
            row.mtry = static_cast<std::size_t>(std::stoull(cells[mtry_col]));
        } catch (const std::exception&) {
            throw ValidationError("results file " + path + " line " + std::to_string(line_no) +
                                  ": cannot parse integer factor");
        }
        bool ok = false;
        row.mapb = parse_double(cells[mapb_col], ok);
        if (!ok) {
            throw ValidationError("results file " + path + " line " + std::to_string(line_no) +
                                  ": cannot parse mapb value '" + cells[mapb_col] + "'");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Writes one figure-data CSV per sample size, rows grouped by distribution
/// (in the canonical eleven-function order) and sorted within each
/// distribution by the bar ordering key (resample, tree_type, mtry).
/// Returns the written file paths.
inline std::vector<std::string> write_figure_csvs(const std::string& results_path,
                                                  const std::string& out_dir) {
    const auto rows = load_results_csv(results_path);
    std::map<std::size_t, std::vector<FigureRow>> by_n;
    for (const auto& row : rows) {
        by_n[row.n].push_back(row);
    }
    std::filesystem::create_directories(out_dir);

    std::vector<std::string> written;
    for (auto& [n, group] : by_n) {
        std::sort(group.begin(), group.end(), [](const FigureRow& a, const FigureRow& b) {
            const auto key = [](const FigureRow& r) {
                return std::make_tuple(sim_function_ordinal(parse_sim_function(r.distribution)),
                                       r.resample, r.tree_type, r.mtry);
            };
            return key(a) < key(b);
        });
        const std::filesystem::path path =
            std::filesystem::path(out_dir) / ("figure_n" + std::to_string(n) + ".csv");
        std::ofstream out(path, std::ios::trunc);
        if (!out) {
            throw IoError("cannot open for writing: " + path.string());
        }
        out << "distribution,mtry,tree_type,resample,mapb\n";
        for (const auto& row : group) {
            out << row.distribution << ',' << row.mtry << ',' << row.tree_type << ','
                << row.resample << ',' << format_double(row.mapb) << '\n';
        }
        out.flush();
        if (!out) {
            throw IoError("write failed: " + path.string());
        }
        written.push_back(path.string());
    }
    return written;
}

}  // namespace rfvar

#endif  // RFVAR_REPORT_HPP
