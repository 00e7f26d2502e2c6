#include "mlr/population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

// The finite-SNR update reduces to three one-dimensional integrals.  With
// s = ||theta*||/sigma, t = ||theta||/sigma, rho the cosine between iterate
// and target, D = 1 + (1 - rho^2) s^2, a = sqrt(1 + s^2)/D, b = rho s / D
// (note a > |b| always), and the mixture-weight factors
//
//   w(u)  =  pi1 e^{-bu} + pi2 e^{bu},
//   wt(u) = -pi1 e^{-bu} + pi2 e^{bu},
//
// the kernel integrals are
//
//   I_N   = Int tanh(nu - t u)       K0(a|u|) w(u)  du,
//   I_a   = Int tanh(nu - t u)  u    K0(a|u|) w(u)  du,
//   I_chi = Int tanh(nu - t u) |u|   K1(a|u|) wt(u) du,
//
// and the update is
//
//   tanh(nu_next) = I_N / (pi sqrt(D)),
//   theta_next    = -(sigma/pi) D^{-3/2} [ I_a (th + s^2 (th - rho e1))
//                   + s sqrt(1+s^2) I_chi (e1 - rho th) ],
//
// with e1 = theta*/||theta*|| and th = theta/||theta||.  (The basis-vector
// form with normalized orthogonal complements carries 1/sqrt(1-rho^2)
// factors that cancel exactly; the grouping above stays finite as
// rho -> +-1, where the cross terms vanish and the output falls on the
// target line with no special-casing.)  The kernels decay like
// e^{-(a-|b|)|u|}, so the integrands are evaluated through the scaled Bessel
// functions with the exponentials folded into the kernel argument, which
// keeps every intermediate finite for any SNR and any mixing weights,
// including degenerate ones.

namespace mlr::population {
namespace {

constexpr double kPi = std::numbers::pi;

struct Kernels {
  double a, b, t, nu, pi1, pi2;

  double tanh_term(double u) const { return std::tanh(nu - t * u); }
  // K0(a|u|) w(u) and K1(a|u|) wt(u), evaluated overflow-free.
  double k0w(double u) const {
    const double au = a * std::fabs(u);
    return specfun::bessel_k0e(au) *
           (pi1 * std::exp(-b * u - au) + pi2 * std::exp(b * u - au));
  }
  double k1wt(double u) const {
    const double au = a * std::fabs(u);
    return specfun::bessel_k1e(au) *
           (-pi1 * std::exp(-b * u - au) + pi2 * std::exp(b * u - au));
  }
};

// Split points for the quadrature: the kernel kink at 0 and, when the tanh
// factor actually varies, its crossing point and saturation edges.
std::vector<double> split_points(double t, double nu) {
  std::vector<double> splits{0.0};
  if (t > 0.0 && std::isfinite(nu)) {
    const double u0 = nu / t;
    splits.push_back(u0);
    splits.push_back(u0 - 30.0 / t);
    splits.push_back(u0 + 30.0 / t);
  }
  return splits;
}

Basis make_basis(const Eigen::VectorXd& theta,
                 const Eigen::VectorXd& theta_star, double rho) {
  Basis basis;
  basis.e_hat1 = theta_star / theta_star.norm();
  basis.e_vec1 = theta / theta.norm();
  const Eigen::VectorXd hat2 = basis.e_vec1 - rho * basis.e_hat1;
  const Eigen::VectorXd vec2 = basis.e_hat1 - rho * basis.e_vec1;
  const double n2 = hat2.norm();
  const double m2 = vec2.norm();
  if (n2 > 0.0 && m2 > 0.0) {
    basis.e_hat2 = hat2 / n2;
    basis.e_vec2 = vec2 / m2;
  }
  return basis;
}

double cos_angle(const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
  return std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0);
}

}  // namespace

KernelParams kernel_params(const Eigen::VectorXd& theta,
                           const GroundTruth& truth) {
  if (!(truth.sigma > 0.0))
    throw std::domain_error("kernel_params: sigma must be > 0");
  const double star_norm = truth.theta_star.norm();
  const double theta_norm = theta.norm();
  if (star_norm == 0.0 || theta_norm == 0.0)
    throw std::domain_error("kernel_params: theta and theta_star nonzero");
  if (theta.size() != truth.theta_star.size())
    throw std::domain_error("kernel_params: dimension mismatch");
  const double s = star_norm / truth.sigma;
  const double rho = cos_angle(theta, truth.theta_star);
  const double d_fac = 1.0 + std::max(0.0, 1.0 - rho * rho) * s * s;
  return {std::sqrt(1.0 + s * s) / d_fac, rho * s / d_fac,
          truth.pi_star.nu(), theta_norm / truth.sigma};
}

PopulationUpdate update_all_snr(const Eigen::VectorXd& theta, double nu,
                                const GroundTruth& truth,
                                const specfun::QuadratureSpec& quad) {
  const double sigma = truth.sigma;
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw std::domain_error("update_all_snr: need 0 < sigma < infinity");
  if (!std::isfinite(nu))
    throw std::domain_error("update_all_snr: nu must be finite");
  const double star_norm = truth.theta_star.norm();
  const double theta_norm = theta.norm();
  if (star_norm == 0.0 || theta_norm == 0.0)
    throw std::domain_error(
        "update_all_snr: theta and theta_star must be nonzero");
  if (theta.size() != truth.theta_star.size())
    throw std::domain_error("update_all_snr: dimension mismatch");

  const double s = star_norm / sigma;
  const double t = theta_norm / sigma;
  const double rho = cos_angle(theta, truth.theta_star);
  const double rho2c = std::max(0.0, 1.0 - rho * rho);
  const double d_fac = 1.0 + rho2c * s * s;
  const Kernels ker{std::sqrt(1.0 + s * s) / d_fac, rho * s / d_fac, t, nu,
                    truth.pi_star.pi1(), truth.pi_star.pi2()};

  const std::vector<double> splits = split_points(t, nu);
  const double inf = std::numeric_limits<double>::infinity();
  const double tail = 1.0 / (ker.a - std::fabs(ker.b));

  const double i_n = specfun::integrate(
                         [&](double u) { return ker.tanh_term(u) * ker.k0w(u); },
                         -inf, inf, quad, splits, tail)
                         .value;
  const double i_a =
      specfun::integrate(
          [&](double u) { return ker.tanh_term(u) * u * ker.k0w(u); }, -inf,
          inf, quad, splits, tail)
          .value;
  const double i_chi =
      specfun::integrate(
          [&](double u) {
            return ker.tanh_term(u) * std::fabs(u) * ker.k1wt(u);
          },
          -inf, inf, quad, splits, tail)
          .value;

  PopulationUpdate out;
  out.basis = make_basis(theta, truth.theta_star, rho);
  const Eigen::VectorXd& e1 = out.basis.e_hat1;
  const Eigen::VectorXd& th = out.basis.e_vec1;
  out.tanh_nu_next = std::clamp(i_n / (kPi * std::sqrt(d_fac)), -1.0, 1.0);
  out.theta_next = -(sigma / kPi) * std::pow(d_fac, -1.5) *
                   (i_a * (th + s * s * (th - rho * e1)) +
                    s * std::sqrt(1.0 + s * s) * i_chi * (e1 - rho * th));
  return out;
}

PopulationUpdate update_no_separation(double theta_bar_norm,
                                      const Eigen::VectorXd& direction,
                                      double nu,
                                      const specfun::QuadratureSpec& quad) {
  if (!(theta_bar_norm >= 0.0))
    throw std::domain_error("update_no_separation: norm must be >= 0");
  const double dir_norm = direction.norm();
  if (dir_norm == 0.0)
    throw std::domain_error("update_no_separation: direction must be nonzero");
  // Limit of the finite-SNR update as s -> 0: D -> 1, a -> 1, b -> 0 and
  // the mixture weights drop out.
  const double t = theta_bar_norm;
  const std::vector<double> splits = split_points(t, nu);
  const double inf = std::numeric_limits<double>::infinity();
  auto k0 = [](double u) { return specfun::bessel_k0(std::fabs(u)); };
  const double i_n =
      specfun::integrate(
          [&](double u) { return std::tanh(nu - t * u) * k0(u); }, -inf, inf,
          quad, splits, 1.0)
          .value;
  const double i_a =
      specfun::integrate(
          [&](double u) { return std::tanh(nu - t * u) * u * k0(u); }, -inf,
          inf, quad, splits, 1.0)
          .value;
  PopulationUpdate out;
  out.basis.e_hat1 = direction / dir_norm;
  out.basis.e_vec1 = out.basis.e_hat1;
  out.tanh_nu_next = std::clamp(i_n / kPi, -1.0, 1.0);
  out.theta_next = -(i_a / kPi) * out.basis.e_hat1;
  return out;
}

PopulationUpdate update_noiseless(const Eigen::VectorXd& theta,
                                  const GroundTruth& truth) {
  const double star_norm = truth.theta_star.norm();
  const double theta_norm = theta.norm();
  if (star_norm == 0.0 || theta_norm == 0.0)
    throw std::domain_error(
        "update_noiseless: theta and theta_star must be nonzero");
  if (theta.size() != truth.theta_star.size())
    throw std::domain_error("update_noiseless: dimension mismatch");
  const double rho = cos_angle(theta, truth.theta_star);
  const SuboptimalityAngles ang = angles_from_rho(rho);
  PopulationUpdate out;
  out.basis = make_basis(theta, truth.theta_star, rho);
  out.theta_next = (2.0 / kPi) * star_norm *
                   (ang.sign_rho * ang.varphi * out.basis.e_hat1 +
                    std::cos(ang.varphi) * out.basis.e_vec1);
  out.tanh_nu_next =
      ang.sign_rho * (ang.varphi / (kPi / 2.0)) * truth.pi_star.tanh_nu;
  return out;
}

double recurrence_tan(double tan_varphi, double varphi) {
  return tan_varphi + varphi * (tan_varphi * tan_varphi + 1.0);
}

Eigen::Vector2d cycloid_point(double phi, double sign_rho0) {
  return {sign_rho0 * (1.0 - (phi - std::sin(phi)) / kPi),
          (1.0 - std::cos(phi)) / kPi};
}

double cycloid_distance(double phi) {
  return std::hypot((phi - std::sin(phi)) / kPi,
                    (1.0 - std::cos(phi)) / kPi);
}

double mixing_error_population(double varphi_prev,
                               const MixingState& pi_star) {
  return std::fabs(1.0 - varphi_prev / (kPi / 2.0)) * pi_star.imbalance_l1();
}

EmRun iterate_noiseless(const Eigen::VectorXd& theta0,
                        const GroundTruth& truth, int t_max, double eps) {
  if (t_max <= 0) throw std::domain_error("iterate_noiseless: t_max <= 0");
  if (!(eps > 0.0)) throw std::domain_error("iterate_noiseless: eps <= 0");
  EmRun run;
  run.thetas.push_back(theta0);
  run.tanh_nus.push_back(0.0);
  run.angles.push_back(suboptimality(theta0, truth.theta_star));
  const double sign0 = run.angles.front().sign_rho;
  auto record_errors = [&](const Eigen::VectorXd& th, double tanh_nu,
                           double sign_t) {
    run.theta_rel_err.push_back(
        (th - sign_t * truth.theta_star).norm() / truth.theta_star.norm());
    run.pi_l1_err.push_back(
        std::fabs(tanh_nu - sign0 * truth.pi_star.tanh_nu));
  };
  record_errors(theta0, 0.0, sign0);
  run.reason = Termination::max_iters;
  run.terminated_at = t_max;
  for (int t = 1; t <= t_max; ++t) {
    const SuboptimalityAngles prev = run.angles.back();
    const PopulationUpdate upd = update_noiseless(run.thetas.back(), truth);
    run.thetas.push_back(upd.theta_next);
    run.tanh_nus.push_back(upd.tanh_nu_next);
    run.angles.push_back(suboptimality(upd.theta_next, truth.theta_star));
    record_errors(upd.theta_next, upd.tanh_nu_next,
                  run.angles.back().sign_rho);
    // Exact distance of iterate t to sgn(rho^0) theta*, from the trajectory
    // formula in terms of the pre-update cycloid parameter; numerically
    // stable where the vector difference has fully cancelled.
    if (cycloid_distance(prev.phi) < eps) {
      run.reason = Termination::rel_tol;
      run.terminated_at = t;
      break;
    }
  }
  return run;
}

}  // namespace mlr::population
