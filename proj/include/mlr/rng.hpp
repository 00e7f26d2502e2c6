#pragma once

#include <cstdint>

// Deterministic random number generation.  A counter-style SplitMix64 core
// drives everything; child streams are derived by hashing (state, index), so
// experiment replicates can be generated independently and in any order
// while staying bit-reproducible across platforms.

namespace mlr {

// Inverse standard normal CDF (Wichura's PPND16 rational approximations),
// accurate to ~1e-16 relative over p in (0, 1).  Throws std::domain_error
// outside (0, 1).
double inverse_normal_cdf(double p);

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // Independent child stream determined by (current state, index); does not
  // advance this generator.
  Rng split(std::uint64_t index) const;

  // Uniform on the open interval (0, 1): (u53 + 0.5) * 2^-53.
  double uniform();

  // Standard normal via the inverse CDF; exactly one uniform per draw.
  double gaussian() { return inverse_normal_cdf(uniform()); }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t state_;
};

}  // namespace mlr
