#include "mlr/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "mlr/csv.hpp"

namespace mlr {

MixingState mixing_from_probability(double p1) {
  if (!(p1 >= 0.0) || !(p1 <= 1.0))
    throw std::domain_error("mixing_from_probability: p1 must be in [0,1]");
  return {2.0 * p1 - 1.0};
}

SuboptimalityAngles angles_from_rho(double rho) {
  rho = std::clamp(rho, -1.0, 1.0);
  const double acos_abs = std::acos(std::fabs(rho));
  return {rho, std::numbers::pi / 2.0 - acos_abs, 2.0 * acos_abs, sgn(rho)};
}

SuboptimalityAngles suboptimality(const Eigen::VectorXd& theta,
                                  const Eigen::VectorXd& theta_star) {
  const double nt = theta.norm(), ns = theta_star.norm();
  if (nt == 0.0 || ns == 0.0)
    throw std::domain_error("suboptimality: zero vector");
  if (theta.size() != theta_star.size())
    throw std::domain_error("suboptimality: dimension mismatch");
  return angles_from_rho(theta.dot(theta_star) / (nt * ns));
}

double stable_tan_varphi(const Eigen::VectorXd& theta,
                         const Eigen::VectorXd& theta_star) {
  const double ns = theta_star.norm();
  if (ns == 0.0 || theta.norm() == 0.0)
    throw std::domain_error("stable_tan_varphi: zero vector");
  const Eigen::VectorXd e1 = theta_star / ns;
  const double along = theta.dot(e1);
  const double perp = (theta - along * e1).norm();
  if (perp == 0.0) return std::numeric_limits<double>::infinity();
  return std::fabs(along) / perp;
}

const char* to_string(Termination t) {
  switch (t) {
    case Termination::max_iters: return "max_iters";
    case Termination::rel_tol: return "rel_tol";
    default: return "degenerate";
  }
}

std::string dataset_csv(const Dataset& data) {
  const Eigen::Index n = data.size(), d = data.dim();
  std::string out;
  out.reserve(static_cast<std::size_t>(n + 1) *
              static_cast<std::size_t>(d + 2) * 12);
  for (Eigen::Index j = 0; j < d; ++j) {
    out += "x_";
    out += csv::format_int(j);
    out += ',';
  }
  out += "y,z\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out += csv::format_double(data.x(i, j));
      out += ',';
    }
    out += csv::format_double(data.y(i));
    out += ',';
    out += csv::format_int(data.z(i));
    out += '\n';
  }
  return out;
}

std::string emrun_csv(const EmRun& run) {
  std::string out = "t,rho,varphi,phi,theta_rel_err,pi_l1_err,tanh_nu\n";
  for (std::size_t t = 0; t < run.thetas.size(); ++t) {
    out += csv::format_int(static_cast<long long>(t));
    out += ',';
    out += csv::format_double(run.angles[t].rho);
    out += ',';
    out += csv::format_double(run.angles[t].varphi);
    out += ',';
    out += csv::format_double(run.angles[t].phi);
    out += ',';
    out += csv::format_double(run.theta_rel_err[t]);
    out += ',';
    out += csv::format_double(run.pi_l1_err[t]);
    out += ',';
    out += csv::format_double(run.tanh_nus[t]);
    out += '\n';
  }
  return out;
}

}  // namespace mlr
