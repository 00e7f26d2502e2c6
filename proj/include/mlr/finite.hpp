#pragma once

#include <Eigen/Core>

#include "mlr/datagen.hpp"
#include "mlr/model.hpp"

// Finite-sample EM for the two-component mixed linear regression model.
//
// The standard step solves the least-squares normal equations with the
// sample Gram matrix; the "easy" step drops the Gram solve (valid because
// the covariate covariance is the identity) and is cheap enough to rerun on
// fresh batches, which is what the sample-splitting initializer exploits.
// The *_noiseless steps are the sigma -> 0 limits, where the posterior
// weights collapse to sign products and nu drops out of the E-step.

namespace mlr::finite {

enum class SigmaMode {
  finite_sigma,    // tanh weights with the dataset's sigma (must be > 0)
  exact_noiseless  // sign-product weights, sigma ignored
};

// Schedule of the staged pipeline: t_easy Gram-free steps, then t_standard
// standard steps on the same data.  t_easy = -1 derives default_t_easy(n).
struct EmConfig {
  int t_easy = -1;
  int t_standard = 20;
  SigmaMode sigma_mode = SigmaMode::finite_sigma;
  double rel_tol = 1e-12;  // early stop on relative iterate change
  double clamp = 50.0;     // |tanh argument| beyond this saturates to +-1
};

struct StepResult {
  Eigen::VectorXd theta_next;
  double tanh_nu_next = 0.0;
};

// One standard EM step.  Posterior weights are
// w_i = tanh(nu + y_i <x_i, theta> / sigma^2), saturated beyond +-clamp;
// theta_next solves the Gram normal equations (factorized, never inverted):
//   ((1/n) X^T X) theta_next = (1/n) sum w_i y_i x_i,
// and tanh_nu_next = mean w_i.  Requires n >= d and a positive-definite
// Gram matrix.
StepResult em_step(const Dataset& data, const Eigen::VectorXd& theta,
                   double nu, double sigma, double clamp = 50.0);

// Same E-step, but the M-step keeps the raw moment (no Gram solve).
StepResult easy_em_step(const Dataset& data, const Eigen::VectorXd& theta,
                        double nu, double sigma, double clamp = 50.0);

// sigma -> 0 limits on noiseless data (y_i = +-<x_i, theta*> exactly):
// the weighted responses become |y_i| sgn<x_i, theta> and the mixing average
// becomes (1/n) sum sgn(y_i) sgn<x_i, theta>, with sgn(0) := +1.  Only the
// observed (x_i, y_i) are read, never the hidden labels.
StepResult em_step_noiseless(const Dataset& data,
                             const Eigen::VectorXd& theta);
StepResult easy_em_step_noiseless(const Dataset& data,
                                  const Eigen::VectorXd& theta);

// Number of easy iterations that suffices to escape the orthogonal region
// with failure probability `delta`: ceil(log2(n / max(1, log(1/delta)))).
int default_t_easy(int n, double delta = 0.05);

// Staged pipeline from (theta0, pi0) on one dataset, recording per-iteration
// angles, relative theta error against sgn(rho^t) theta*, and l1 mixing
// error against the sign-resolved target mixture (sign taken from rho^0).
// sigma comes from data.truth.  Early-stops (reason rel_tol) when the
// relative theta change drops below config.rel_tol, except during an easy
// phase that still feeds a standard phase; stops with reason degenerate if
// an iterate collapses to zero norm.
EmRun run_pipeline(const Dataset& data, const Eigen::VectorXd& theta0,
                   const MixingState& pi0, const EmConfig& config = {});

struct EasyInitResult {
  Eigen::VectorXd theta;
  MixingState mixing;
  int iterations = 0;             // fresh batches consumed
  bool reached_threshold = false; // varphi exceeded 1/sqrt(batch_size)
};

// Sample-splitting easy-EM initialization: draws a fresh batch of
// batch_size samples from `source` per iteration (substream split(i) of the
// source seed) and returns the first iterate whose angle varphi exceeds
// 1/sqrt(batch_size) — checked before the first batch, so a good theta0
// returns immediately with iterations = 0 — or the final iterate with
// reached_threshold = false after t0_max batches.
EasyInitResult easy_em_init(const datagen::GenSpec& source, int batch_size,
                            int t0_max, const Eigen::VectorXd& theta0,
                            const MixingState& pi0);

}  // namespace mlr::finite
