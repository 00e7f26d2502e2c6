#pragma once

#include <Eigen/Core>
#include <cstdint>

#include "mlr/model.hpp"
#include "mlr/rng.hpp"

// Seeded synthetic data generation for the mixed regression model, plus the
// random directions used to initialize experiments.
//
// Determinism contract: all randomness flows through the SplitMix64 streams
// of mlr::Rng with Gaussians drawn by inverse CDF (one uniform per normal),
// and each sample consumes its draws in a fixed order (label uniform, d
// covariate normals, one noise normal — the noise draw happens even when
// sigma = 0 so streams align across noise levels).  A given seed therefore
// reproduces a dataset bit-for-bit.

namespace mlr::datagen {

struct GenSpec {
  int n = 0;
  int d = 0;
  GroundTruth truth;
  std::uint64_t seed = 0;
};

// n i.i.d. samples from the model.  With sigma = 0 the responses are exactly
// +-<theta*, x> (no noise term is added).
Dataset generate(const GenSpec& spec);

// Same, drawing from an already-positioned stream; truth/seed are recorded
// in the returned Dataset (seed is informational here).
Dataset sample(const GroundTruth& truth, int n, Rng rng,
               std::uint64_t seed_label = 0);

// Uniform direction on the unit sphere in R^d (Gaussian draw, normalized).
Eigen::VectorXd sample_unit_sphere(int d, std::uint64_t seed);
Eigen::VectorXd sample_unit_sphere(int d, Rng& rng);

// Unit vector theta0 with suboptimality(theta0, theta_star).varphi equal to
// varphi0 in (0, pi/2]; the component orthogonal to theta_star points in a
// uniformly random direction of the orthogonal complement.  varphi0 = pi/2
// returns exactly theta_star/||theta_star||.  Requires d >= 2 for
// varphi0 < pi/2.
Eigen::VectorXd sample_initial_with_angle(const Eigen::VectorXd& theta_star,
                                          double varphi0, std::uint64_t seed);
Eigen::VectorXd sample_initial_with_angle(const Eigen::VectorXd& theta_star,
                                          double varphi0, Rng& rng);

// Vector of d i.i.d. standard normals.
Eigen::VectorXd gaussian_vector(int d, Rng& rng);

}  // namespace mlr::datagen
