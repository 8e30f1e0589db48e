#pragma once

#include <charconv>
#include <string>

namespace avsim {

// shortest round-trip decimal form; keeps CSV artifacts byte-stable
inline std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace avsim
