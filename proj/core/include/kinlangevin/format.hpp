#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace kinlangevin {

/// Shortest decimal string that round-trips to the same double; "inf", "-inf", "nan" otherwise.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return {buf, res.ptr};
}

}  // namespace kinlangevin
