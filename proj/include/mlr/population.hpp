#pragma once

#include <Eigen/Core>

#include "mlr/model.hpp"
#include "mlr/specfun.hpp"

// Population-level (infinite-sample) EM operators for the symmetric
// two-component mixed linear regression model: the all-SNR closed form via
// Bessel-kernel quadrature, its no-separation (SNR -> 0) and noiseless
// (SNR -> infinity) limits, the scalar angle recurrence, and the cycloid
// parameterization of the noiseless trajectory.

namespace mlr::population {

// Orthonormal frame spanning {theta, theta*}:
//   e_hat1 = theta*/||theta*||,   e_vec1 = theta/||theta||,
//   e_hat2 completes theta-hat:   theta-hat = rho*e_hat1 + sqrt(1-rho^2)*e_hat2,
//   e_vec2 completes e_hat1:      e_hat1   = rho*e_vec1 + sqrt(1-rho^2)*e_vec2.
// The second pair is empty (size 0) when the inputs are collinear, and both
// "hat" slots alias the preserved direction for the no-separation update,
// which has no target vector.
struct Basis {
  Eigen::VectorXd e_hat1;
  Eigen::VectorXd e_hat2;
  Eigen::VectorXd e_vec1;
  Eigen::VectorXd e_vec2;
};

// One application of a population EM operator.  theta_next always lies in
// span{theta, theta*}; tanh_nu_next is clamped to [-1, 1].
struct PopulationUpdate {
  Eigen::VectorXd theta_next;
  double tanh_nu_next = 0.0;
  Basis basis;
};

// Scale parameters of the all-SNR kernel integrals, in noise units
// (s = ||theta*||/sigma, rho the iterate/target cosine, D = 1+(1-rho^2)s^2):
//   a = sqrt(1+s^2)/D  -- decay slope of the K0/K1 argument,
//   b = rho*s/D        -- slope of the exponential mixture weight.
// a > |b| always (a^2 - b^2 = 1/D > 0), which is what makes the integrands
// decay like exp(-(a-|b|)|u|).  nu_star may be +-infinity for degenerate
// mixtures; theta_bar_norm = ||theta||/sigma.
struct KernelParams {
  double a = 1.0;
  double b = 0.0;
  double nu_star = 0.0;
  double theta_bar_norm = 0.0;
};

KernelParams kernel_params(const Eigen::VectorXd& theta,
                           const GroundTruth& truth);

// Exact population EM update at finite SNR (0 < sigma < infinity), evaluated
// by adaptive quadrature of the three kernel integrals.  Requires finite nu
// and nonzero theta, theta*; degenerate mixtures (tanh nu* = +-1) are fine.
PopulationUpdate update_all_snr(const Eigen::VectorXd& theta, double nu,
                                const GroundTruth& truth,
                                const specfun::QuadratureSpec& quad = {});

// SNR -> 0 limit in noise units (theta_bar = theta/sigma).  The direction is
// preserved; only the norm and the mixing weight move:
//   ||theta_bar_next|| = (1/pi) Int tanh(||theta_bar|| x - nu) x K0(|x|) dx,
//   tanh_nu_next       = (1/pi) Int tanh(nu - ||theta_bar|| x)   K0(|x|) dx.
// theta_bar_norm = 0 is legal (the odd integrand vanishes).
PopulationUpdate update_no_separation(double theta_bar_norm,
                                      const Eigen::VectorXd& direction,
                                      double nu,
                                      const specfun::QuadratureSpec& quad = {});

// SNR -> infinity limit; exact closed form, no quadrature (sigma ignored):
//   theta_next   = (2/pi)||theta*|| [sgn(rho) varphi e_hat1 + cos(varphi) e_vec1],
//   tanh_nu_next = sgn(rho) (varphi / (pi/2)) tanh(nu*).
PopulationUpdate update_noiseless(const Eigen::VectorXd& theta,
                                  const GroundTruth& truth);

// Scalar angle recurrence of the noiseless update:
//   tan(varphi_next) = tan_varphi + varphi (tan_varphi^2 + 1).
// The caller supplies both tan(varphi) and varphi so the angle need not be
// re-derived from the tangent near pi/2.
double recurrence_tan(double tan_varphi, double varphi);

// Point of the limiting cycloid for parameter phi in [0, pi], in the
// (e_hat1, e_hat2^0) plane coordinates normalized by ||theta*||:
//   1 - sign_rho0 * x = (phi - sin phi)/pi,   y = (1 - cos phi)/pi.
Eigen::Vector2d cycloid_point(double phi, double sign_rho0);

// Distance (normalized by ||theta*||) from the iterate *after* an update to
// the sign-resolved target, as a function of the pre-update cycloid
// parameter: (1/pi) sqrt((phi - sin phi)^2 + (1 - cos phi)^2).
double cycloid_distance(double phi);

// Population mixing-weight error after one noiseless update from angle
// varphi_prev: ||pi_next - target||_1 = |1 - (2/pi) varphi_prev| |tanh nu*|.
double mixing_error_population(double varphi_prev, const MixingState& pi_star);

// Iterates update_noiseless from theta0 until the (exact) distance to
// sgn(rho^0) theta* drops below eps or t_max iterations elapse.  Records the
// full trajectory with per-iteration angles and errors; the mixing iterate
// starts at tanh nu = 0 (the noiseless theta update does not depend on it).
// rho^0 = 0 stalls on the saddle ray and runs to t_max.
EmRun iterate_noiseless(const Eigen::VectorXd& theta0, const GroundTruth& truth,
                        int t_max, double eps);

}  // namespace mlr::population
