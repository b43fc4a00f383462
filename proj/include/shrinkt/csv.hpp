#ifndef SHRINKT_CSV_HPP
#define SHRINKT_CSV_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "errors.hpp"

/**
 * @file csv.hpp
 *
 * @brief Minimal comma-separated tables.
 *
 * Numbers are written in the shortest form that reads back to the same
 * double, so reading an emitted file and writing it again is byte-identical.
 * Missing values are `NA`; infinities are `Inf` / `-Inf`. Quoting is not
 * supported: fields must not contain commas or line breaks.
 */

namespace shrinkt::csv {

inline std::string format_double(double x) {
    if (std::isnan(x)) {
        return "NA";
    }
    if (std::isinf(x)) {
        return x > 0 ? "Inf" : "-Inf";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

/**
 * @throws DataError when `text` is not a complete number, NA or +/-Inf.
 */
inline double parse_double(std::string_view text) {
    if (text == "NA" || text == "NaN" || text == "nan") {
        return std::nan("");
    }
    if (text == "Inf" || text == "inf" || text == "+Inf") {
        return std::numeric_limits<double>::infinity();
    }
    if (text == "-Inf" || text == "-inf") {
        return -std::numeric_limits<double>::infinity();
    }
    if (!text.empty() && text.front() == '+') {
        text.remove_prefix(1);
    }
    double x = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
    if (text.empty() || res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
        throw DataError("not a number: '" + std::string(text) + "'");
    }
    return x;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /**
     * @throws DataError if the column is absent.
     */
    size_t column(std::string_view name) const {
        for (size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) {
                return i;
            }
        }
        throw DataError("missing column '" + std::string(name) + "'");
    }

    bool has_column(std::string_view name) const {
        for (const auto& h : header) {
            if (h == name) {
                return true;
            }
        }
        return false;
    }

    /**
     * Numeric cell; errors name the line (1-based, header is line 1) and column.
     */
    double number(size_t row, size_t col) const {
        try {
            return parse_double(rows[row][col]);
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(row + 2) + ", column '" + header[col] + "': " + e.what());
        }
    }
};

inline std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        const size_t comma = line.find(',', start);
        std::string_view field = line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) {
            field.remove_prefix(1);
        }
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) {
            field.remove_suffix(1);
        }
        out.emplace_back(field);
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

inline Table read(std::istream& in) {
    Table table;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        auto fields = split_line(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                            " fields, found " + std::to_string(fields.size()));
        }
        table.rows.push_back(std::move(fields));
    }
    if (table.header.empty()) {
        throw DataError("empty CSV: header required");
    }
    return table;
}

inline Table read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open '" + path + "'");
    }
    return read(in);
}

inline void write(std::ostream& out, const Table& table) {
    auto emit = [&](const std::vector<std::string>& fields) {
        for (size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) {
                out << ',';
            }
            out << fields[i];
        }
        out << '\n';
    };
    emit(table.header);
    for (const auto& r : table.rows) {
        emit(r);
    }
}

inline void write_file(const std::string& path, const Table& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write '" + path + "'");
    }
    write(out, table);
}

/**
 * Re-emit every numeric-looking cell in canonical form.
 */
inline Table canonicalize(const Table& table) {
    Table out = table;
    for (auto& row : out.rows) {
        for (auto& cell : row) {
            try {
                cell = format_double(parse_double(cell));
            } catch (const DataError&) {
            }
        }
    }
    return out;
}

}

#endif
