#pragma once

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "relsym/errors.hpp"

namespace relsym {

/// Doubles rendered with 17 significant digits round-trip bit-exactly
/// through strtod, which the dataset format relies on.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& tok) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0') throw DataError("malformed number: '" + tok + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& tok) {
    char* end = nullptr;
    const std::uint64_t v = std::strtoull(tok.c_str(), &end, 10);
    if (end == tok.c_str() || *end != '\0') throw DataError("malformed integer: '" + tok + "'");
    return v;
}

namespace kvdetail {
inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}
} // namespace kvdetail

/// "key = value" lines; '#' starts a comment; blank lines ignored.
inline std::map<std::string, std::string> read_kv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = kvdetail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw DataError(path + ": expected 'key = value', got '" + line + "'");
        out[kvdetail::trim(line.substr(0, eq))] = kvdetail::trim(line.substr(eq + 1));
    }
    return out;
}

inline void write_kv_file(const std::string& path,
                          const std::vector<std::pair<std::string, std::string>>& entries) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    for (const auto& [k, v] : entries) out << k << " = " << v << "\n";
    if (!out) throw DataError("write failed for " + path);
}

} // namespace relsym
