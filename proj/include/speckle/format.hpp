#pragma once

#include <charconv>
#include <string>

namespace speckle {

/// Shortest decimal text that round-trips to the same double ("inf", "nan"
/// for non-finite values). Independent of locale and stream state.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace speckle
