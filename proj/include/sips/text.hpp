#pragma once

#include <cstdio>
#include <string>

namespace sips {

/// Shortest round-trippable decimal form of a double; used for all CSV and
/// JSON output so re-runs are byte-identical.
inline std::string fmt_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace sips
