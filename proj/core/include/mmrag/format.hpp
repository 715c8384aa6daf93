#pragma once

#include <charconv>
#include <string>

namespace mmrag {

/// Shortest round-trip decimal form (std::to_chars); deterministic across
/// runs, used for every float written to CSV.
inline std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace mmrag
