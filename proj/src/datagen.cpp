#include "mlr/datagen.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mlr::datagen {

Dataset sample(const GroundTruth& truth, int n, Rng rng,
               std::uint64_t seed_label) {
  if (n <= 0) throw std::domain_error("sample: n must be positive");
  if (truth.theta_star.size() == 0)
    throw std::domain_error("sample: empty theta_star");
  if (truth.sigma < 0.0)
    throw std::domain_error("sample: sigma must be >= 0");
  const Eigen::Index d = truth.theta_star.size();
  const double pi1 = truth.pi_star.pi1();
  Dataset data;
  data.x.resize(n, d);
  data.y.resize(n);
  data.z.resize(n);
  data.truth = truth;
  data.seed = seed_label;
  for (int i = 0; i < n; ++i) {
    const bool first = rng.uniform() < pi1;
    data.z(i) = first ? 1 : 2;
    for (Eigen::Index j = 0; j < d; ++j) data.x(i, j) = rng.gaussian();
    const double eps = rng.gaussian();  // drawn even when sigma = 0
    const double signal =
        (first ? 1.0 : -1.0) * data.x.row(i).dot(truth.theta_star);
    data.y(i) = truth.sigma > 0.0 ? signal + truth.sigma * eps : signal;
  }
  return data;
}

Dataset generate(const GenSpec& spec) {
  if (spec.d != spec.truth.theta_star.size())
    throw std::domain_error("generate: spec.d != theta_star length");
  return sample(spec.truth, spec.n, Rng(spec.seed), spec.seed);
}

Eigen::VectorXd gaussian_vector(int d, Rng& rng) {
  if (d <= 0) throw std::domain_error("gaussian_vector: d must be positive");
  Eigen::VectorXd v(d);
  for (int j = 0; j < d; ++j) v(j) = rng.gaussian();
  return v;
}

Eigen::VectorXd sample_unit_sphere(int d, Rng& rng) {
  Eigen::VectorXd v = gaussian_vector(d, rng);
  double norm = v.norm();
  // A zero draw has probability zero but would poison the normalization.
  while (norm == 0.0) {
    v = gaussian_vector(d, rng);
    norm = v.norm();
  }
  return v / norm;
}

Eigen::VectorXd sample_unit_sphere(int d, std::uint64_t seed) {
  Rng rng(seed);
  return sample_unit_sphere(d, rng);
}

Eigen::VectorXd sample_initial_with_angle(const Eigen::VectorXd& theta_star,
                                          double varphi0, Rng& rng) {
  const double norm = theta_star.norm();
  if (norm == 0.0)
    throw std::domain_error("sample_initial_with_angle: zero theta_star");
  if (!(varphi0 > 0.0) || !(varphi0 <= std::numbers::pi / 2.0))
    throw std::domain_error(
        "sample_initial_with_angle: varphi0 must be in (0, pi/2]");
  const Eigen::VectorXd e1 = theta_star / norm;
  // The angle between theta0 and theta_star is the complement of varphi0;
  // varphi0 = pi/2 gives alpha = 0 and theta0 = e1 exactly.
  const double alpha = std::numbers::pi / 2.0 - varphi0;
  if (alpha == 0.0) return e1;
  if (theta_star.size() < 2)
    throw std::domain_error(
        "sample_initial_with_angle: need d >= 2 for varphi0 < pi/2");
  const int d = static_cast<int>(theta_star.size());
  Eigen::VectorXd u = gaussian_vector(d, rng);
  u -= u.dot(e1) * e1;
  double un = u.norm();
  while (un == 0.0) {
    u = gaussian_vector(d, rng);
    u -= u.dot(e1) * e1;
    un = u.norm();
  }
  return std::cos(alpha) * e1 + std::sin(alpha) * (u / un);
}

Eigen::VectorXd sample_initial_with_angle(const Eigen::VectorXd& theta_star,
                                          double varphi0,
                                          std::uint64_t seed) {
  Rng rng(seed);
  return sample_initial_with_angle(theta_star, varphi0, rng);
}

}  // namespace mlr::datagen
