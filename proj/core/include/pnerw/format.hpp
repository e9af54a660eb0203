#pragma once

#include <charconv>
#include <string>

namespace pnerw::io {

/// Shortest decimal form that round-trips to the same double. Every numeric
/// output goes through this, so downstream consumers never lose precision.
inline std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace pnerw::io
