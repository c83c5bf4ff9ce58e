#include "io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "svf/error.hpp"

namespace svf::cli {

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_line(const std::string& line, const std::string& where) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(trim(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    if (quoted) throw Error(ErrorCode::Validation, where + ": unterminated quote");
    out.push_back(trim(cell));
    return out;
}

std::string where(const std::string& path, std::size_t line) { return path + ":" + std::to_string(line); }

}  // namespace

std::optional<std::size_t> CsvTable::column(const std::string& name) const {
    const std::string key = lower(name);
    for (std::size_t i = 0; i < header.size(); ++i)
        if (lower(header[i]) == key) return i;
    return std::nullopt;
}

double CsvTable::number(std::size_t row, std::size_t col) const {
    const std::string& cell = rows[row][col];
    const std::string loc = where(path, lines[row]) + ": column '" + header[col] + "'";
    if (cell.empty()) throw Error(ErrorCode::Validation, loc + " is missing a value");
    double v = 0.0;
    const char* end = cell.data() + cell.size();
    auto res = std::from_chars(cell.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
        throw Error(ErrorCode::Validation, loc + ": '" + cell + "' is not a finite number");
    return v;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    CsvTable t;
    t.path = path.string();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty() || line[0] == '#') continue;
        auto cells = split_line(line, where(t.path, lineno));
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw Error(ErrorCode::Validation, where(t.path, lineno) + ": expected " + std::to_string(t.header.size()) +
                                                   " fields, found " + std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
        t.lines.push_back(lineno);
    }
    if (t.header.empty()) throw Error(ErrorCode::Validation, t.path + ": file has no header row");
    return t;
}

ReturnSeries load_returns(const std::filesystem::path& path, const std::string& column) {
    const CsvTable t = read_csv(path);
    ReturnSeries s;
    std::optional<std::size_t> col;
    if (!column.empty()) {
        col = t.column(column);
        if (!col) throw Error(ErrorCode::Validation, t.path + ": no column named '" + column + "'");
        s.from_prices = lower(column) == "price" || lower(column) == "close";
    } else if ((col = t.column("return"))) {
        s.from_prices = false;
    } else if ((col = t.column("price"))) {
        s.from_prices = true;
    } else {
        throw Error(ErrorCode::Validation, t.path + ": needs a 'return' or 'price' column");
    }
    auto label_col = t.column("date");
    if (!label_col) label_col = t.column("t");

    std::vector<double> values(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) values[r] = t.number(r, *col);
    if (s.from_prices) {
        for (std::size_t r = 0; r < values.size(); ++r)
            if (!(values[r] > 0.0))
                throw Error(ErrorCode::NonpositiveInput, where(t.path, t.lines[r]) + ": prices must be positive");
        for (std::size_t r = 1; r < values.size(); ++r) {
            s.returns.push_back(std::log(values[r] / values[r - 1]));
            if (label_col) s.labels.push_back(t.rows[r][*label_col]);
        }
    } else {
        s.returns = std::move(values);
        if (label_col)
            for (const auto& row : t.rows) s.labels.push_back(row[*label_col]);
    }
    return s;
}

std::vector<IntradayTick> load_intraday(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const auto ts = t.column("timestamp");
    const auto px = t.column("price");
    if (!ts || !px) throw Error(ErrorCode::Validation, t.path + ": needs 'timestamp' and 'price' columns");
    std::vector<IntradayTick> out;
    out.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const std::string& s = t.rows[r][*ts];
        int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
        char sep = 0;
        const int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &mo, &d, &sep, &h, &mi, &sec);
        if (n < 6 || (sep != ' ' && sep != 'T') || h > 23 || mi > 59 || sec > 60)
            throw Error(ErrorCode::Validation,
                        where(t.path, t.lines[r]) + ": timestamp '" + s + "' is not YYYY-MM-DD HH:MM[:SS]");
        IntradayTick tick;
        tick.date = s.substr(0, 10);
        tick.seconds = h * 3600 + mi * 60 + (n == 7 ? sec : 0);
        tick.price = t.number(r, *px);
        out.push_back(tick);
    }
    return out;
}

nlohmann::json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string text = buf.str();
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw Error(ErrorCode::Validation, path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) +
                                               ": invalid JSON");
    }
}

std::string format_full(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

std::string format_short(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

}  // namespace svf::cli
