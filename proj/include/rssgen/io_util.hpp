#pragma once

#include <charconv>
#include <cstdio>
#include <string>

namespace rssgen {

/// Shortest round-trip decimal rendering of a double; deterministic across
/// runs, used for every number written to CSV files.
inline std::string fmt_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// CSV field quoting for values that may contain commas or quotes.
inline std::string csv_quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

} // namespace rssgen
