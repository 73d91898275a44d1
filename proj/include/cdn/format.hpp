#pragma once

#include <charconv>
#include <string>

namespace cdn {

// Shortest decimal string that parses back to the same double.
inline std::string to_decimal(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace cdn
