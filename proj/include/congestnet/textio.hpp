#pragma once

#include <charconv>
#include <stdexcept>
#include <string>

namespace congestnet {

// Shortest decimal form that parses back to the identical double; locale-free,
// so every text artifact is byte-reproducible.
inline std::string fmt_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
        throw std::runtime_error("bad number '" + s + "'");
    return v;
}

} // namespace congestnet
