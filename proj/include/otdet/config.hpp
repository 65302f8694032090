#pragma once

// Structured text configuration:
//
//   # comment
//   [section]
//   key = value
//
// Values are strings, numbers, vectors `[1, 2, 3]` or row-major matrices
// `[[1, 0], [0, 1]]`. Keys are addressed as "section.key".

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Dense>

#include "otdet/error.hpp"

namespace otdet {

class Config {
public:
    struct Entry {
        std::string value;
        std::size_t line = 0;
    };

    static Config parse(std::istream& is, const std::string& source = "<config>") {
        Config cfg;
        cfg.source_ = source;
        std::string line, section;
        std::size_t line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty()) throw ConfigError(where(source, line_no) + "empty section name");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) throw ConfigError(where(source, line_no) + "expected 'key = value'");
            const std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError(where(source, line_no) + "missing key");
            // Bracketed values may continue over following lines until balanced.
            while (depth(value) > 0 && std::getline(is, line)) {
                ++line_no;
                const auto h = line.find('#');
                if (h != std::string::npos) line.erase(h);
                value += " " + trim(line);
            }
            if (depth(value) != 0) throw ConfigError(where(source, line_no) + "unbalanced brackets");
            const std::string full = section.empty() ? key : section + "." + key;
            cfg.entries_[full] = Entry{value, line_no};
        }
        return cfg;
    }

    static Config load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open config file '" + path + "'");
        return parse(in, path);
    }

    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    const std::map<std::string, Entry>& entries() const { return entries_; }

    void set(const std::string& key, std::string value) { entries_[key] = Entry{std::move(value), 0}; }

    std::string get_string(const std::string& key) const { return entry(key).value; }
    std::optional<std::string> maybe_string(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return get_string(key);
    }

    double get_double(const std::string& key) const {
        const auto& e = entry(key);
        return to_double(e.value, key, e.line);
    }
    std::optional<double> maybe_double(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return get_double(key);
    }

    std::int64_t get_int(const std::string& key) const {
        const auto& e = entry(key);
        std::int64_t v = 0;
        const auto* end = e.value.data() + e.value.size();
        const auto res = std::from_chars(e.value.data(), end, v);
        if (res.ec != std::errc{} || res.ptr != end)
            throw ConfigError(where(source_, e.line) + key + ": expected an integer, got '" + e.value + "'");
        return v;
    }
    std::optional<std::int64_t> maybe_int(const std::string& key) const {
        if (!has(key)) return std::nullopt;
        return get_int(key);
    }

    Eigen::VectorXd get_vector(const std::string& key) const {
        const auto& e = entry(key);
        std::size_t pos = 0;
        auto v = parse_list(e.value, pos, key, e.line);
        expect_end(e.value, pos, key, e.line);
        return Eigen::Map<Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    Eigen::MatrixXd get_matrix(const std::string& key) const {
        const auto& e = entry(key);
        const std::string& s = e.value;
        std::size_t pos = skip_ws(s, 0);
        if (pos >= s.size() || s[pos] != '[') throw ConfigError(where(source_, e.line) + key + ": expected a matrix literal");
        ++pos;
        std::vector<std::vector<double>> rows;
        while (true) {
            pos = skip_ws(s, pos);
            if (pos < s.size() && s[pos] == ']' && rows.empty()) {
                ++pos;
                break;
            }
            rows.push_back(parse_list(s, pos, key, e.line));
            pos = skip_ws(s, pos);
            if (pos < s.size() && s[pos] == ',') {
                ++pos;
                continue;
            }
            if (pos < s.size() && s[pos] == ']') {
                ++pos;
                break;
            }
            throw ConfigError(where(source_, e.line) + key + ": malformed matrix literal");
        }
        expect_end(s, pos, key, e.line);
        if (rows.empty()) return Eigen::MatrixXd(0, 0);
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.front().size()) throw ConfigError(where(source_, e.line) + key + ": ragged matrix rows");
            for (std::size_t j = 0; j < rows[i].size(); ++j)
                m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
        return m;
    }

    const std::string& source() const { return source_; }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string::npos) return {};
        const auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }
    static int depth(const std::string& s) {
        int d = 0;
        for (char c : s) d += (c == '[') - (c == ']');
        return d;
    }
    static std::string where(const std::string& source, std::size_t line) {
        return line ? source + ":" + std::to_string(line) + ": " : source + ": ";
    }
    static std::size_t skip_ws(const std::string& s, std::size_t pos) {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
        return pos;
    }

    const Entry& entry(const std::string& key) const {
        const auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError(source_ + ": missing key '" + key + "'");
        return it->second;
    }

    double to_double(const std::string& s, const std::string& key, std::size_t line) const {
        double v = 0.0;
        const char* first = s.data();
        const char* last = s.data() + s.size();
        if (first != last && *first == '+') ++first;
        const auto res = std::from_chars(first, last, v);
        if (s.empty() || res.ec != std::errc{} || res.ptr != last)
            throw ConfigError(where(source_, line) + key + ": expected a number, got '" + s + "'");
        return v;
    }

    std::vector<double> parse_list(const std::string& s, std::size_t& pos, const std::string& key, std::size_t line) const {
        pos = skip_ws(s, pos);
        if (pos >= s.size() || s[pos] != '[') throw ConfigError(where(source_, line) + key + ": expected '['");
        ++pos;
        std::vector<double> out;
        while (true) {
            pos = skip_ws(s, pos);
            if (pos < s.size() && s[pos] == ']') {
                ++pos;
                return out;
            }
            const auto end = s.find_first_of(",]", pos);
            if (end == std::string::npos) throw ConfigError(where(source_, line) + key + ": unterminated list");
            out.push_back(to_double(trim(s.substr(pos, end - pos)), key, line));
            pos = end;
            if (s[pos] == ',') ++pos;
        }
    }

    void expect_end(const std::string& s, std::size_t pos, const std::string& key, std::size_t line) const {
        if (skip_ws(s, pos) != s.size()) throw ConfigError(where(source_, line) + key + ": trailing characters");
    }

    std::string source_;
    std::map<std::string, Entry> entries_;
};

}  // namespace otdet
