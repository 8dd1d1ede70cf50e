#pragma once

#include <charconv>
#include <string>

namespace grf {

// Shortest round-trip decimal form; parsing it recovers the double exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace grf
