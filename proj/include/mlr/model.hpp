#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

// Core types for the symmetric two-component mixed linear regression model
//
//   y = (-1)^{z+1} <theta*, x> + sigma * eps,   x ~ N(0, I_d),
//   P(z = 1) = pi1,  eps ~ N(0, 1),
//
// plus the angle conventions shared by the population-level analysis and the
// finite-sample experiments.

namespace mlr {

// Sign with sgn(0) = +1, so ties break toward the positive branch
// everywhere (label products, angle mirroring, fixed-point selection).
inline double sgn(double x) { return x >= 0.0 ? 1.0 : -1.0; }

// Mixing weights (pi1, pi2).  The primary field is tanh_nu = pi1 - pi2, so
// the degenerate mixtures {1,0}/{0,1} are first-class values; the log-odds
// nu = 0.5*log(pi1/pi2) is derived and may be +-infinity.
struct MixingState {
  double tanh_nu = 0.0;

  double nu() const { return std::atanh(tanh_nu); }
  double pi1() const { return 0.5 * (1.0 + tanh_nu); }
  double pi2() const { return 0.5 * (1.0 - tanh_nu); }
  // L1 distance between (pi1, pi2) and the balanced mixture (1/2, 1/2).
  double imbalance_l1() const { return std::fabs(tanh_nu); }
};

MixingState mixing_from_probability(double p1);

inline MixingState mixing_from_nu(double nu) { return {std::tanh(nu)}; }

// Reflected target mixture: pi1 and pi2 swap when the iterate converges to
// -theta* (sign_rho0 = -1).
inline MixingState target_mixture(const MixingState& pi_star,
                                  double sign_rho0) {
  return {sign_rho0 * pi_star.tanh_nu};
}

// Generative model parameters.  sigma = 0 encodes the noiseless setting.
struct GroundTruth {
  Eigen::VectorXd theta_star;
  MixingState pi_star;
  double sigma = 1.0;

  double snr() const {
    if (sigma < 0.0) throw std::domain_error("GroundTruth: sigma < 0");
    if (sigma == 0.0) return std::numeric_limits<double>::infinity();
    return theta_star.norm() / sigma;
  }
};

// Angles of an iterate against the target:
//   rho    = cosine, clamped to [-1, 1];
//   varphi = pi/2 - arccos|rho|, the acute angle to the target *line*
//            (varphi = pi/2 means collinear);
//   phi    = 2*arccos|rho| = pi - 2*varphi, the cycloid parameter.
struct SuboptimalityAngles {
  double rho = 0.0;
  double varphi = 0.0;
  double phi = 0.0;
  double sign_rho = 1.0;
};

SuboptimalityAngles angles_from_rho(double rho);

SuboptimalityAngles suboptimality(const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& theta_star);

// tan(varphi) computed from the vector decomposition
// |<theta, e1>| / ||theta - <theta, e1> e1||, where e1 = theta*/||theta*||.
// Unlike tan(arcsin|rho|) this stays meaningful (it just keeps growing) when
// the angle to the target line drops below the arccos resolution limit;
// returns +inf for exactly collinear input.
double stable_tan_varphi(const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& theta_star);

// A generated sample set.  z keeps the hidden component labels (values 1/2)
// for diagnostics only; no estimator reads them.  The generating parameters
// and seed travel with the data so a run can compute its per-iteration
// errors and a result file can state its provenance.
struct Dataset {
  Eigen::MatrixXd x;  // n x d, one covariate vector per row
  Eigen::VectorXd y;  // n responses
  Eigen::VectorXi z;  // hidden labels in {1, 2}
  GroundTruth truth;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return y.size(); }
  Eigen::Index dim() const { return x.cols(); }
};

enum class Termination { max_iters, rel_tol, degenerate };

const char* to_string(Termination t);

// Recorded EM trajectory (population or finite-sample) with per-iteration
// diagnostics against the ground truth.  Index 0 is the initial point, so
// thetas.size() == terminated_at + 1.
struct EmRun {
  std::vector<Eigen::VectorXd> thetas;
  std::vector<double> tanh_nus;
  std::vector<SuboptimalityAngles> angles;  // vs theta_star
  std::vector<double> theta_rel_err;  // ||theta - sgn(rho^t) theta*||/||theta*||
  std::vector<double> pi_l1_err;      // vs target_mixture(pi*, sgn rho^0)
  int terminated_at = 0;
  Termination reason = Termination::max_iters;
};

// CSV serialization of a sample set: header `x_0,...,x_{d-1},y,z`, one row
// per sample, shortest round-trip decimal formatting (parsing the text
// reproduces the doubles bit-for-bit).
std::string dataset_csv(const Dataset& data);

// Per-iteration CSV of a recorded run:
// `t,rho,varphi,phi,theta_rel_err,pi_l1_err,tanh_nu`.
std::string emrun_csv(const EmRun& run);

}  // namespace mlr
