#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <utility>
#include <vector>

#include "mlr/model.hpp"
#include "mlr/rng.hpp"

// Validation instruments: exact Gaussian expectation identities, seeded
// Monte-Carlo oracles for the population EM operators, trajectory residuals
// against the limiting cycloid, and convergence-rate estimation.

namespace mlr::diagnostics {

// E sgn<x, theta*> sgn<x, theta> for x ~ N(0, I):
// sgn(rho) * varphi / (pi/2).
double grothendieck_expectation(const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& theta_star);

// E |theta*^T x x^T theta| = ||theta*|| ||theta|| (2/pi)
// (varphi sin varphi + cos varphi).
double abs_quadratic_expectation(const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& theta_star);

// Empirical mean with per-component standard errors.  Draws are sharded
// into n_shards fixed substreams (split(shard) of the seed) combined in
// shard order, so the result is identical whether shards run sequentially
// or on a thread pool.
struct McEstimate {
  Eigen::VectorXd mean;
  Eigen::VectorXd std_error;
  long long n_draws = 0;
  std::uint64_t seed = 0;
  int n_shards = 1;
};

// Monte-Carlo oracle for the population EM update: draws (z, x, eps) from
// the true model (theta*, pi* from `truth`, noise level `sigma`) and
// averages the update integrands
//   M: tanh(nu + y<x,theta>/sigma^2) y x      (first element, d components)
//   N: tanh(nu + y<x,theta>/sigma^2)          (second element, 1 component)
// with tanh saturated beyond |50|.  sigma = 0 switches to the sign-based
// noiseless integrands |y| sgn<x,theta> x and sgn(y) sgn<x,theta>.
std::pair<McEstimate, McEstimate> mc_population_oracle(
    const Eigen::VectorXd& theta, double nu, const GroundTruth& truth,
    double sigma, long long n_draws, std::uint64_t seed);

// Monte-Carlo routes for the two identities above (x ~ N(0, I) draws of the
// sign product and of |<theta*, x><x, theta>|); scalar estimates.
McEstimate mc_sign_product(const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& theta_star,
                           long long n_draws, std::uint64_t seed);
McEstimate mc_abs_quadratic(const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& theta_star,
                            long long n_draws, std::uint64_t seed);

// Deviation of a recorded trajectory from the limiting cycloid, measured in
// the normalized (e_hat1, e_hat2^0) plane built from theta_star and theta0:
// max over t >= 1 of the distance between iterate t's plane coordinates and
// cycloid_point(phi^{t-1}, sgn rho^0), plus the largest out-of-plane
// component.  Throws when theta0 is collinear with theta_star up to rounding
// (relative orthogonal part <= 1e-12; the plane is then undefined).
struct CycloidResidual {
  double max_in_plane = 0.0;
  double max_out_of_plane = 0.0;
};

CycloidResidual cycloid_residual(const EmRun& run,
                                 const Eigen::VectorXd& theta0,
                                 const Eigen::VectorXd& theta_star);

// Ordinary least squares of log series[t+1] against log series[t]; the
// slope estimates the convergence-rate exponent.  Requires at least three
// strictly positive entries.
struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
};

LogLogFit convergence_exponent(const std::vector<double>& series);

// ||theta - sign * theta*|| / ||theta*||.
double theta_relative_error(const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& theta_star, double sign);

// ||pi - target_mixture(pi*, sign_rho0)||_1 = |tanh nu - sign_rho0 tanh nu*|.
double pi_l1_error(const MixingState& pi, const MixingState& pi_star,
                   double sign_rho0);

}  // namespace mlr::diagnostics
