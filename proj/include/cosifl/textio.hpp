#pragma once
#include <charconv>
#include <string>
#include <system_error>

namespace cosifl {

// Shortest round-trip decimal form, locale-independent. All CSV output goes
// through this so repeated runs are byte-identical.
inline std::string fmt_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace cosifl
