#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "latentscope/common.hpp"

namespace latentscope {

// Shortest round-trip decimal form; locale-independent and byte-stable
// across runs, which the reproducibility checks rely on.
inline std::string format_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& context) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    require_config(res.ec == std::errc() && res.ptr == s.data() + s.size(),
                   "cannot parse number '" + std::string(s) + "' in " + context);
    return v;
}

inline void write_csv_matrix(const std::string& path,
                             const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary);
    require_config(out.good(), "cannot open for writing: " + path);
    std::string line;
    for (const auto& row : rows) {
        line.clear();
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) line += ',';
            line += format_double(row[i]);
        }
        line += '\n';
        out << line;
    }
    require_config(out.good(), "write failed: " + path);
}

inline std::vector<std::string> split_fields(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::vector<std::vector<double>> read_csv_matrix(const std::string& path) {
    std::ifstream in(path);
    require_config(in.good(), "cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line);
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_double(f, path));
        if (!rows.empty())
            require_config(row.size() == rows.front().size(), "ragged csv row in " + path);
        rows.push_back(std::move(row));
    }
    require_config(!rows.empty(), "empty csv: " + path);
    return rows;
}

// Text table with a header line; fields stay strings.
inline void write_csv_table(const std::string& path,
                            const std::vector<std::string>& header,
                            const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    require_config(out.good(), "cannot open for writing: " + path);
    std::string line;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i > 0) line += ',';
        line += header[i];
    }
    out << line << '\n';
    for (const auto& row : rows) {
        line.clear();
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i > 0) line += ',';
            line += row[i];
        }
        out << line << '\n';
    }
    require_config(out.good(), "write failed: " + path);
}

inline std::vector<std::vector<std::string>> read_csv_table(const std::string& path,
                                                            std::vector<std::string>* header = nullptr) {
    std::ifstream in(path);
    require_config(in.good(), "cannot open: " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (first) {
            if (header) *header = fields;
            first = false;
            continue;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace latentscope
