#pragma once

// Minimal CSV helpers: shortest round-trip number formatting and a reader that
// reports the offending line on malformed input.

#include <charconv>
#include <istream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "otdet/error.hpp"

namespace otdet::csv {

inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    for (auto& cell : out) {
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        cell = b == std::string::npos ? std::string{} : cell.substr(b, e - b + 1);
    }
    return out;
}

inline double parse_double(const std::string& cell, const std::string& source, std::size_t line_no) {
    double v = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    if (!cell.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (cell.empty() || res.ec != std::errc{} || res.ptr != last)
        throw IoError(source + ":" + std::to_string(line_no) + ": not a number: '" + cell + "'");
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based, parallel to rows
};

/// Reads a header line and data rows; every row must match the header width.
/// Blank lines and lines starting with '#' are skipped.
inline Table read_table(std::istream& is, const std::string& source) {
    Table t;
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
        auto cells = split(line);
        if (!have_header) {
            t.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw IoError(source + ":" + std::to_string(line_no) + ": expected " + std::to_string(t.header.size()) +
                          " fields, found " + std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
        t.line_numbers.push_back(line_no);
    }
    if (!have_header) throw IoError(source + ": missing header line");
    return t;
}

struct NumericTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline NumericTable read_numeric(std::istream& is, const std::string& source) {
    auto t = read_table(is, source);
    NumericTable out{std::move(t.header), {}};
    out.rows.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        std::vector<double> row;
        row.reserve(t.rows[i].size());
        for (const auto& c : t.rows[i]) row.push_back(parse_double(c, source, t.line_numbers[i]));
        out.rows.push_back(std::move(row));
    }
    return out;
}

}  // namespace otdet::csv
