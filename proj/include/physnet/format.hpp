#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <system_error>

namespace physnet {

// Locale-independent fixed-point formatting (the process never calls
// setlocale, and these avoid it entirely for parsing as well).
inline std::string fmt_fixed(double x, int decimals = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
  return buf;
}

// Shortest representation that parses back to the same double.
inline std::string fmt_shortest(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline bool parse_double(std::string_view text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

}  // namespace physnet
