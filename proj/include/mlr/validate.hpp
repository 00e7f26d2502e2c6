#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mlr/specfun.hpp"

// Machine-checkable validation suites covering the special functions, the
// population-level closed forms (against their Monte-Carlo oracles, limits,
// and frozen golden values), and the diagnostic identities.  The CLI
// `validate` command runs these and writes the rows as CSV; the same rows
// decide its exit status.

namespace mlr::validate {

// One check: two-sided rows pass when |value - reference| <= tolerance;
// one-sided rows (bounds) pass when value stays on the right side of
// reference within tolerance.  The `pass` flag is authoritative.
struct CheckRow {
  std::string name;
  double value = 0.0;
  double reference = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Options {
  long long mc_draws = 1000000;  // Monte-Carlo tolerances scale as 1/sqrt
  std::uint64_t seed = 1729;
  specfun::QuadratureSpec quad{};
};

std::vector<CheckRow> specfun_suite(const Options& opts = {});
std::vector<CheckRow> population_suite(const Options& opts = {});
std::vector<CheckRow> diagnostics_suite(const Options& opts = {});

bool all_pass(const std::vector<CheckRow>& rows);

// CSV serialization with header `check_name,value,reference,tolerance,pass`.
std::string to_csv(const std::vector<CheckRow>& rows);

}  // namespace mlr::validate
