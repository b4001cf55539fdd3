#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace mfk::detail {

// Shortest text that parses back to the same double; "nan"/"inf" spelled out.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace mfk::detail
