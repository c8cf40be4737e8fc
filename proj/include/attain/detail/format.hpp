#pragma once

#include <charconv>
#include <string>

namespace attain::detail {

/// 17 significant digits: enough for exact double round-trip, locale-free.
inline std::string format_full(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

/// Shortest representation that round-trips.
inline std::string format_shortest(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace attain::detail
