#pragma once

#include <charconv>
#include <string>
#include <system_error>

namespace velu {

// Shortest round-trip decimal form of a double. std::to_chars with no
// precision argument is fully specified, so output bytes are identical
// across conforming toolchains; emitted CSV/SVG files rely on this for
// byte-level determinism.
inline std::string double_to_string(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string double_to_string_fixed(double v, int precision) {
  char buf[512];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, precision);
  return std::string(buf, res.ptr);
}

}  // namespace velu
