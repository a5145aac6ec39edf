#pragma once

#include <charconv>
#include <string>

namespace bankbench {

// Shortest text that parses back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, p);
}

}  // namespace bankbench
