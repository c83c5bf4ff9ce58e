#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "svf/evaluation.hpp"

namespace svf::cli {

/// A comma-separated file with a header row. `lines` holds the 1-based file
/// line of each data row for diagnostics.
struct CsvTable {
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> lines;

    std::optional<std::size_t> column(const std::string& name) const;  // case-insensitive
    double number(std::size_t row, std::size_t col) const;             // Validation naming file:line and column
};

CsvTable read_csv(const std::filesystem::path& path);

/// Daily observations. Returns come from a `return` column or are computed as
/// log(P_t / P_{t-1}) from a `price` column; `labels` holds the date (or `t`)
/// of each return row, empty when the file has neither column.
struct ReturnSeries {
    std::vector<double> returns;
    std::vector<std::string> labels;
    bool from_prices = false;
};

ReturnSeries load_returns(const std::filesystem::path& path, const std::string& column = "");

/// Intraday (timestamp, price) rows; timestamps are "YYYY-MM-DD HH:MM[:SS]" or ISO-8601 with 'T'.
std::vector<IntradayTick> load_intraday(const std::filesystem::path& path);

/// Parses JSON; syntax errors are reported with line and column.
nlohmann::json load_json(const std::filesystem::path& path);

std::string format_full(double x);  // shortest round-trip
std::string format_short(double x);  // 6 significant digits

}  // namespace svf::cli
