#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace tma {

/// Locale-independent float formatting (std::to_chars), so emitted CSV and
/// SVG artifacts are byte-stable across environments.
inline std::string format_double(double v, int precision = -1) {
  char buf[64];
  std::to_chars_result r =
      precision < 0
          ? std::to_chars(buf, buf + sizeof(buf), v)
          : std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, r.ptr);
}

}  // namespace tma
