#pragma once

#include <charconv>
#include <string>

namespace sublevel {

/// Shortest decimal text that parses back to exactly v.
inline std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace sublevel
