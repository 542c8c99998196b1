#ifndef RFVAR_DATASET_HPP
#define RFVAR_DATASET_HPP

#include <cmath>
#include <cstddef>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rfvar/common.hpp"

namespace rfvar {

/// Axis-aligned split: x[variable] <= cut routes left, else right. This
/// convention is fixed project-wide.
struct SplitRule {
    std::size_t variable = 0;
    double cut = 0.0;

    bool operator==(const SplitRule&) const = default;
};

/// Immutable numeric training set: an n x p feature matrix stored
/// column-major (split search walks single columns) plus a response vector.
/// No missing values: every cell must be finite, anything else is rejected
/// at construction so the variance estimators never see imputed data.
class Dataset {
public:
    Dataset(std::vector<std::vector<double>> feature_columns, std::vector<double> response,
            std::vector<std::string> column_names = {}, std::string response_name = "y")
        : columns_(std::move(feature_columns)),
          response_(std::move(response)),
          column_names_(std::move(column_names)),
          response_name_(std::move(response_name)) {
        if (columns_.empty()) {
            throw ValidationError("dataset needs at least one feature column");
        }
        if (response_.empty()) {
            throw ValidationError("dataset needs at least one observation");
        }
        const std::size_t rows = response_.size();
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            if (columns_[j].size() != rows) {
                throw ValidationError("feature column " + std::to_string(j + 1) +
                                      " has length " + std::to_string(columns_[j].size()) +
                                      ", expected " + std::to_string(rows));
            }
            for (std::size_t i = 0; i < rows; ++i) {
                if (!std::isfinite(columns_[j][i])) {
                    throw ValidationError("non-finite feature value at row " +
                                          std::to_string(i + 1) + ", column " +
                                          std::to_string(j + 1));
                }
            }
        }
        for (std::size_t i = 0; i < rows; ++i) {
            if (!std::isfinite(response_[i])) {
                throw ValidationError("non-finite response value at row " + std::to_string(i + 1));
            }
        }
        if (column_names_.empty()) {
            column_names_.reserve(columns_.size());
            for (std::size_t j = 0; j < columns_.size(); ++j) {
                column_names_.push_back("x" + std::to_string(j + 1));
            }
        } else if (column_names_.size() != columns_.size()) {
            throw ValidationError("column name count does not match feature count");
        }
    }

    std::size_t n() const { return response_.size(); }
    std::size_t p() const { return columns_.size(); }

    std::span<const double> column(std::size_t j) const { return columns_[j]; }
    std::span<const double> response() const { return response_; }
    double feature(std::size_t row, std::size_t col) const { return columns_[col][row]; }

    std::vector<double> row(std::size_t i) const {
        std::vector<double> out(columns_.size());
        for (std::size_t j = 0; j < columns_.size(); ++j) {
            out[j] = columns_[j][i];
        }
        return out;
    }

    const std::vector<std::string>& column_names() const { return column_names_; }
    const std::string& response_name() const { return response_name_; }

    bool operator==(const Dataset&) const = default;

private:
    std::vector<std::vector<double>> columns_;
    std::vector<double> response_;
    std::vector<std::string> column_names_;
    std::string response_name_;
};

/// A parsed numeric CSV: header names plus column-major values. Used both by
/// load_csv and by prediction inputs that carry no response column.
struct CsvTable {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    std::size_t rows = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        cells.push_back(cell);
    }
    if (!line.empty() && line.back() == ',') {
        cells.emplace_back();
    }
    return cells;
}

}  // namespace detail

/// Parses a comma-separated, header-first, all-numeric CSV. Cells must be
/// finite reals with '.' as the decimal separator.
inline CsvTable load_csv_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ValidationError("empty file (missing header row): " + path);
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }

    CsvTable table;
    table.names = detail::split_csv_line(line);
    if (table.names.empty()) {
        throw ValidationError("header row has no columns: " + path);
    }
    for (std::size_t j = 0; j < table.names.size(); ++j) {
        if (table.names[j].empty()) {
            throw ValidationError("empty column name at position " + std::to_string(j + 1) +
                                  ": " + path);
        }
        for (std::size_t k = 0; k < j; ++k) {
            if (table.names[k] == table.names[j]) {
                throw ValidationError("duplicate column name '" + table.names[j] + "': " + path);
            }
        }
    }
    table.columns.assign(table.names.size(), {});

    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        ++row;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != table.names.size()) {
            throw ValidationError("row " + std::to_string(row) + " has " +
                                  std::to_string(cells.size()) + " cells, expected " +
                                  std::to_string(table.names.size()) + ": " + path);
        }
        for (std::size_t j = 0; j < cells.size(); ++j) {
            bool ok = false;
            const double v = parse_double(cells[j], ok);
            if (!ok) {
                throw ValidationError("cannot parse cell at row " + std::to_string(row) +
                                      ", column '" + table.names[j] + "': '" + cells[j] +
                                      "' in " + path);
            }
            if (!std::isfinite(v)) {
                throw ValidationError("non-finite value at row " + std::to_string(row) +
                                      ", column '" + table.names[j] + "' in " + path);
            }
            table.columns[j].push_back(v);
        }
    }
    table.rows = row;
    return table;
}

/// Loads a Dataset from CSV, extracting the named response column. Feature
/// column order is preserved. Requires at least two rows.
inline Dataset load_csv(const std::string& path, const std::string& response_column) {
    CsvTable table = load_csv_table(path);
    std::size_t response_index = table.names.size();
    for (std::size_t j = 0; j < table.names.size(); ++j) {
        if (table.names[j] == response_column) {
            response_index = j;
            break;
        }
    }
    if (response_index == table.names.size()) {
        throw ValidationError("response column '" + response_column + "' not found in " + path);
    }
    if (table.names.size() < 2) {
        throw ValidationError("no feature columns besides the response in " + path);
    }
    if (table.rows < 2) {
        throw ValidationError("need at least 2 data rows, got " + std::to_string(table.rows) +
                              ": " + path);
    }

    std::vector<double> response = std::move(table.columns[response_index]);
    std::vector<std::vector<double>> features;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < table.names.size(); ++j) {
        if (j == response_index) {
            continue;
        }
        features.push_back(std::move(table.columns[j]));
        names.push_back(table.names[j]);
    }
    return Dataset(std::move(features), std::move(response), std::move(names), response_column);
}

/// Writes header then rows. Values use the shortest decimal representation
/// that parses back to identical bits, so save -> load is an exact
/// round-trip. The response is written as the last column.
inline void save_csv(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot open for writing: " + path);
    }
    for (std::size_t j = 0; j < dataset.p(); ++j) {
        out << dataset.column_names()[j] << ',';
    }
    out << dataset.response_name() << '\n';
    for (std::size_t i = 0; i < dataset.n(); ++i) {
        for (std::size_t j = 0; j < dataset.p(); ++j) {
            out << format_double(dataset.feature(i, j)) << ',';
        }
        out << format_double(dataset.response()[i]) << '\n';
    }
    out.flush();
    if (!out) {
        throw IoError("write failed: " + path);
    }
}

}  // namespace rfvar

#endif  // RFVAR_DATASET_HPP
