#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <string>

namespace fallbench {

// Shortest decimal string that round-trips the double.  Keeps CSV output
// byte-stable across runs and platforms with IEEE doubles.
inline std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
    return std::string(buf);
}

}  // namespace fallbench
