#pragma once

#include <charconv>
#include <span>
#include <string>

namespace ladder {

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

inline std::string join_doubles(std::span<const double> values, char sep = ',') {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace ladder
