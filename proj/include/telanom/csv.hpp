#pragma once

#include "telanom/common.hpp"

#include <charconv>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace telanom::csv {

// Plain comma-delimited fields; the schemas used here never quote.
inline std::vector<std::string_view> split(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

inline std::optional<double> to_double(std::string_view s) {
    double v{};
    if (s.empty()) return std::nullopt;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<long long> to_int(std::string_view s) {
    long long v{};
    if (s.empty()) return std::nullopt;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return v;
}

// Shortest representation that parses back to the same double.
inline std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("cannot format number");
    return std::string(buf, ptr);
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DependencyError("cannot open input file: " + path);
    return in;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open output file: " + path, "io");
    return out;
}

}  // namespace telanom::csv
