#include "mlr/finite.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mlr::finite {
namespace {

double clamped_tanh(double arg, double clamp) {
  if (arg >= clamp) return 1.0;
  if (arg <= -clamp) return -1.0;
  return std::tanh(arg);
}

void check_inputs(const Dataset& data, const Eigen::VectorXd& theta) {
  if (data.size() == 0) throw std::domain_error("em: empty dataset");
  if (theta.size() != data.dim())
    throw std::domain_error("em: theta dimension mismatch");
}

// Posterior-weighted M-step right-hand side (1/n) sum w_i y_i x_i and the
// mixing average (1/n) sum w_i.
struct EStep {
  Eigen::VectorXd rhs;
  double mean_w;
};

EStep e_step(const Dataset& data, const Eigen::VectorXd& theta, double nu,
             double sigma, double clamp) {
  if (!(sigma > 0.0)) throw std::domain_error("em: sigma must be > 0");
  const Eigen::Index n = data.size();
  const Eigen::VectorXd proj = data.x * theta;
  const double inv_s2 = 1.0 / (sigma * sigma);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i)
    w(i) = clamped_tanh(nu + data.y(i) * proj(i) * inv_s2, clamp);
  return {data.x.transpose() * (w.cwiseProduct(data.y)) /
              static_cast<double>(n),
          w.mean()};
}

EStep e_step_noiseless(const Dataset& data, const Eigen::VectorXd& theta) {
  const Eigen::Index n = data.size();
  const Eigen::VectorXd proj = data.x * theta;
  Eigen::VectorXd v(n);
  double mean_w = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = sgn(proj(i));
    v(i) = s * std::fabs(data.y(i));
    mean_w += s * sgn(data.y(i));
  }
  return {data.x.transpose() * v / static_cast<double>(n),
          mean_w / static_cast<double>(n)};
}

Eigen::LDLT<Eigen::MatrixXd> gram_factor(const Dataset& data) {
  if (data.size() < data.dim())
    throw std::runtime_error("em: n < d, Gram matrix cannot be full rank");
  const Eigen::MatrixXd gram =
      data.x.transpose() * data.x / static_cast<double>(data.size());
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const Eigen::VectorXd diag = ldlt.vectorD();
  const double dmax = diag.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || !(diag.minCoeff() > 1e-12 * dmax))
    throw std::runtime_error("em: Gram matrix is not positive definite");
  return ldlt;
}

StepResult finish_step(Eigen::VectorXd theta_next, double mean_w,
                       const char* who) {
  if (!theta_next.allFinite() || !std::isfinite(mean_w))
    throw std::runtime_error(std::string(who) + ": non-finite update");
  return {std::move(theta_next), mean_w};
}

double nu_from_tanh(double t) { return std::atanh(std::clamp(t, -1.0, 1.0)); }

}  // namespace

StepResult em_step(const Dataset& data, const Eigen::VectorXd& theta,
                   double nu, double sigma, double clamp) {
  check_inputs(data, theta);
  const EStep e = e_step(data, theta, nu, sigma, clamp);
  return finish_step(gram_factor(data).solve(e.rhs), e.mean_w, "em_step");
}

StepResult easy_em_step(const Dataset& data, const Eigen::VectorXd& theta,
                        double nu, double sigma, double clamp) {
  check_inputs(data, theta);
  const EStep e = e_step(data, theta, nu, sigma, clamp);
  return finish_step(e.rhs, e.mean_w, "easy_em_step");
}

StepResult em_step_noiseless(const Dataset& data,
                             const Eigen::VectorXd& theta) {
  check_inputs(data, theta);
  const EStep e = e_step_noiseless(data, theta);
  return finish_step(gram_factor(data).solve(e.rhs), e.mean_w,
                     "em_step_noiseless");
}

StepResult easy_em_step_noiseless(const Dataset& data,
                                  const Eigen::VectorXd& theta) {
  check_inputs(data, theta);
  const EStep e = e_step_noiseless(data, theta);
  return finish_step(e.rhs, e.mean_w, "easy_em_step_noiseless");
}

int default_t_easy(int n, double delta) {
  if (n <= 0) throw std::domain_error("default_t_easy: n must be > 0");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw std::domain_error("default_t_easy: delta must be in (0,1)");
  const double denom = std::max(1.0, std::log(1.0 / delta));
  return static_cast<int>(
      std::ceil(std::log2(std::max(1.0, static_cast<double>(n) / denom))));
}

EmRun run_pipeline(const Dataset& data, const Eigen::VectorXd& theta0,
                   const MixingState& pi0, const EmConfig& config) {
  check_inputs(data, theta0);
  if (data.truth.theta_star.norm() == 0.0)
    throw std::domain_error("run_pipeline: dataset has no ground truth");
  const double sigma = data.truth.sigma;
  const bool noiseless = config.sigma_mode == SigmaMode::exact_noiseless;
  if (!noiseless && !(sigma > 0.0))
    throw std::domain_error(
        "run_pipeline: finite_sigma mode needs sigma > 0 "
        "(use exact_noiseless for sigma = 0 data)");
  const int t_easy = config.t_easy >= 0
                         ? config.t_easy
                         : default_t_easy(static_cast<int>(data.size()));
  const int t_standard = config.t_standard;
  if (t_standard < 0) throw std::domain_error("run_pipeline: t_standard < 0");
  if (t_easy + t_standard < 1)
    throw std::domain_error("run_pipeline: schedule has no iterations");

  Eigen::LDLT<Eigen::MatrixXd> ldlt;
  if (t_standard > 0) ldlt = gram_factor(data);

  EmRun run;
  const double tanh_star = data.truth.pi_star.tanh_nu;
  const double star_norm = data.truth.theta_star.norm();
  auto record = [&](const Eigen::VectorXd& th, double tanh_nu) {
    run.thetas.push_back(th);
    run.tanh_nus.push_back(tanh_nu);
    run.angles.push_back(suboptimality(th, data.truth.theta_star));
    const double sign_t = run.angles.back().sign_rho;
    const double sign0 = run.angles.front().sign_rho;
    run.theta_rel_err.push_back(
        (th - sign_t * data.truth.theta_star).norm() / star_norm);
    run.pi_l1_err.push_back(std::fabs(tanh_nu - sign0 * tanh_star));
  };
  record(theta0, pi0.tanh_nu);

  Eigen::VectorXd theta = theta0;
  double tanh_nu = pi0.tanh_nu;
  double nu = nu_from_tanh(tanh_nu);
  run.reason = Termination::max_iters;
  const int total = t_easy + t_standard;
  for (int it = 0; it < total; ++it) {
    const bool easy = it < t_easy;
    const EStep e = noiseless ? e_step_noiseless(data, theta)
                              : e_step(data, theta, nu, sigma, config.clamp);
    const Eigen::VectorXd next =
        easy ? e.rhs : Eigen::VectorXd(ldlt.solve(e.rhs));
    if (!next.allFinite() || !std::isfinite(e.mean_w) || next.norm() == 0.0) {
      run.reason = Termination::degenerate;
      break;
    }
    const bool done =
        (next - theta).norm() <= config.rel_tol * std::max(theta.norm(), 1e-300) &&
        std::fabs(e.mean_w - tanh_nu) <= config.rel_tol;
    theta = next;
    tanh_nu = e.mean_w;
    nu = nu_from_tanh(tanh_nu);
    record(theta, tanh_nu);
    // An easy phase that still feeds a standard phase must run to length:
    // its fixed point is not the pipeline's answer.
    if (done && (!easy || t_standard == 0)) {
      run.reason = Termination::rel_tol;
      break;
    }
  }
  run.terminated_at = static_cast<int>(run.thetas.size()) - 1;
  return run;
}

EasyInitResult easy_em_init(const datagen::GenSpec& source, int batch_size,
                            int t0_max, const Eigen::VectorXd& theta0,
                            const MixingState& pi0) {
  if (batch_size < 1)
    throw std::domain_error("easy_em_init: batch_size must be >= 1");
  if (t0_max < 0) throw std::domain_error("easy_em_init: t0_max < 0");
  if (source.truth.theta_star.norm() == 0.0)
    throw std::domain_error("easy_em_init: zero theta_star");
  const double threshold = 1.0 / std::sqrt(static_cast<double>(batch_size));
  const bool noiseless = !(source.truth.sigma > 0.0);
  const Rng base(source.seed);

  EasyInitResult out{theta0, pi0, 0, false};
  if (suboptimality(theta0, source.truth.theta_star).varphi > threshold) {
    out.reached_threshold = true;
    return out;
  }
  double nu = nu_from_tanh(pi0.tanh_nu);
  for (int it = 1; it <= t0_max; ++it) {
    const Dataset batch = datagen::sample(
        source.truth, batch_size, base.split(static_cast<std::uint64_t>(it)),
        source.seed);
    const StepResult step =
        noiseless ? easy_em_step_noiseless(batch, out.theta)
                  : easy_em_step(batch, out.theta, nu, source.truth.sigma);
    out.theta = step.theta_next;
    out.mixing = MixingState{step.tanh_nu_next};
    out.iterations = it;
    nu = nu_from_tanh(step.tanh_nu_next);
    if (out.theta.norm() == 0.0) continue;  // stay on, next batch may move it
    if (suboptimality(out.theta, source.truth.theta_star).varphi > threshold) {
      out.reached_threshold = true;
      return out;
    }
  }
  return out;
}

}  // namespace mlr::finite
