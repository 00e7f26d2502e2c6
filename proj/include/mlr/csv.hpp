#pragma once

#include <charconv>
#include <cstdint>
#include <string>

// Deterministic, locale-independent number formatting for result files.
// std::to_chars emits the shortest representation that round-trips, so two
// runs with the same seed produce byte-identical output.

namespace mlr::csv {

inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_int(long long v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_uint(std::uint64_t v) {
  char buf[24];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace mlr::csv
