#pragma once

#include <charconv>
#include <string>

namespace ndtx::detail {

// Shortest decimal form that round-trips to the same double.
inline std::string format_real(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ec == std::errc() ? ptr : buf);
}

}  // namespace ndtx::detail
