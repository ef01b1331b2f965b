#ifndef GAFATT_CSV_HPP
#define GAFATT_CSV_HPP

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gafatt/error.hpp"

namespace gafatt::csv {

using Row = std::vector<std::string>;

inline bool needs_quoting(std::string_view field) {
    return field.find_first_of(",\"\n\r") != std::string_view::npos;
}

inline std::string quote(std::string_view field) {
    if (!needs_quoting(field)) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline void write_row(std::ostream& os, const Row& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) os << ',';
        os << quote(fields[i]);
    }
    os << '\n';
}

// RFC-4180-style parser: quoted fields may contain commas, doubled quotes
// and newlines. Accepts both \n and \r\n row terminators.
inline std::vector<Row> parse(std::string_view text, const std::string& source_name) {
    std::vector<Row> rows;
    Row row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty())
                    fail(ErrorCategory::load,
                         source_name + ": stray quote in unquoted field at row " +
                             std::to_string(rows.size() + 1));
                in_quotes = true;
                row_started = true;
                break;
            case ',':
                row.push_back(std::move(field));
                field.clear();
                row_started = true;
                break;
            case '\r':
                break;
            case '\n':
                if (row_started || !field.empty()) {
                    row.push_back(std::move(field));
                    field.clear();
                    rows.push_back(std::move(row));
                    row.clear();
                }
                row_started = false;
                break;
            default:
                field += c;
                row_started = true;
                break;
        }
    }
    if (in_quotes)
        fail(ErrorCategory::load, source_name + ": unterminated quoted field");
    if (row_started || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline std::vector<Row> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCategory::io, "cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), path);
}

// Shortest round-trip representation; parsing it back recovers the exact value.
inline std::string format_double(double value) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

inline double parse_double(std::string_view text, const std::string& context) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        fail(ErrorCategory::load, context + ": bad numeric value '" + std::string(text) + "'");
    return value;
}

inline std::int64_t parse_int(std::string_view text, const std::string& context) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        fail(ErrorCategory::load, context + ": bad integer value '" + std::string(text) + "'");
    return value;
}

}  // namespace gafatt::csv

#endif  // GAFATT_CSV_HPP
