#pragma once

#include <cstdio>
#include <string>

namespace lbc::csv {

/// Shortest-safe text for a double: 17 significant digits, '.' decimal.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace lbc::csv
