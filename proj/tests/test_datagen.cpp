#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mlr/datagen.hpp"
#include "mlr/model.hpp"
#include "mlr/rng.hpp"

using mlr::datagen::GenSpec;
using mlr::datagen::generate;
using mlr::datagen::sample_initial_with_angle;
using mlr::datagen::sample_unit_sphere;

namespace {

mlr::GroundTruth make_truth(Eigen::VectorXd theta_star, double p1,
                            double sigma) {
  return {std::move(theta_star), mlr::mixing_from_probability(p1), sigma};
}

// Largest |eigenvalue| of a symmetric matrix by plain power iteration.
double spectral_norm_power_iteration(const Eigen::MatrixXd& m,
                                     std::uint64_t seed) {
  mlr::Rng rng(seed);
  Eigen::VectorXd v = mlr::datagen::gaussian_vector(
      static_cast<int>(m.rows()), rng);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd w = m * v;
    lambda = w.norm();
    if (lambda == 0.0) return 0.0;
    v = w / lambda;
  }
  return lambda;
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("rng streams are deterministic and splittable") {
  mlr::Rng a(12345), b(12345);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  // split() derives from current state without advancing the parent.
  const mlr::Rng parent(99);
  mlr::Rng c1 = parent.split(1), c1_again = parent.split(1);
  mlr::Rng c2 = parent.split(2);
  CHECK(c1.next_u64() == c1_again.next_u64());
  CHECK(c1.next_u64() != c2.next_u64());

  mlr::Rng u(7);
  for (int i = 0; i < 1000; ++i) {
    const double x = u.uniform();
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
}

TEST_CASE("inverse normal cdf") {
  CHECK(mlr::inverse_normal_cdf(0.5) == 0.0);
  CHECK(std::fabs(mlr::inverse_normal_cdf(0.975) - 1.959963984540054) <=
        1e-12);
  CHECK(std::fabs(mlr::inverse_normal_cdf(0.025) +
                  mlr::inverse_normal_cdf(0.975)) <= 1e-13);
  CHECK(std::fabs(mlr::inverse_normal_cdf(0.8413447460685429) - 1.0) <= 1e-9);
  CHECK_THROWS_AS(mlr::inverse_normal_cdf(0.0), std::domain_error);
  CHECK_THROWS_AS(mlr::inverse_normal_cdf(1.0), std::domain_error);
  CHECK_THROWS_AS(mlr::inverse_normal_cdf(-0.5), std::domain_error);
}

TEST_CASE("noiseless responses are exact sign flips") {
  Eigen::VectorXd star(3);
  star << 1.3, -0.7, 0.4;
  const GenSpec spec{200, 3, make_truth(star, 0.6, 0.0), 42};
  const mlr::Dataset data = generate(spec);
  REQUIRE(data.size() == 200);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double signal = data.x.row(i).dot(star);
    const double expected = data.z(i) == 1 ? signal : -signal;
    CHECK(data.y(i) == expected);  // bit-exact, no noise term added
  }
}

TEST_CASE("degenerate mixture produces only the first component") {
  Eigen::VectorXd star(2);
  star << 1.0, 0.0;
  const mlr::Dataset data =
      generate({1000, 2, make_truth(star, 1.0, 0.5), 7});
  for (Eigen::Index i = 0; i < data.size(); ++i) CHECK(data.z(i) == 1);
}

TEST_CASE("label frequencies match the binomial band") {
  Eigen::VectorXd star(2);
  star << 1.0, 0.0;
  const mlr::Dataset data =
      generate({5000, 2, make_truth(star, 0.7, 1.0), 2024});
  const double frac =
      static_cast<double>((data.z.array() == 1).count()) / 5000.0;
  const double band = 3.0 * std::sqrt(0.7 * 0.3 / 5000.0);  // ~0.0194
  CHECK(std::fabs(frac - 0.7) <= band);
}

TEST_CASE("generation is bit-reproducible and noise-stream aligned") {
  Eigen::VectorXd star(4);
  star << 0.5, -0.5, 0.5, -0.5;
  const GenSpec spec{300, 4, make_truth(star, 0.65, 0.3), 555};
  const mlr::Dataset a = generate(spec);
  const mlr::Dataset b = generate(spec);
  CHECK(a.x.cwiseEqual(b.x).all());
  CHECK(a.y.cwiseEqual(b.y).all());
  CHECK(a.z.cwiseEqual(b.z).all());
  CHECK(a.seed == spec.seed);

  // The noise normal is drawn even when sigma = 0, so the same seed yields
  // the same covariates and labels across noise levels.
  GenSpec noiseless = spec;
  noiseless.truth.sigma = 0.0;
  const mlr::Dataset c = generate(noiseless);
  CHECK(a.x.cwiseEqual(c.x).all());
  CHECK(a.z.cwiseEqual(c.z).all());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double signal = c.y(i);
    CHECK(std::fabs(a.y(i) - signal) <= 0.3 * 6.0);  // +- sigma * |eps|
    CHECK(a.y(i) != signal);  // noise actually moved the response
  }
}

TEST_CASE("generate input validation") {
  Eigen::VectorXd star(3);
  star << 1.0, 0.0, 0.0;
  CHECK_THROWS_AS(generate({100, 2, make_truth(star, 0.5, 1.0), 1}),
                  std::domain_error);  // d mismatch
  CHECK_THROWS_AS(generate({0, 3, make_truth(star, 0.5, 1.0), 1}),
                  std::domain_error);  // empty
  CHECK_THROWS_AS(generate({10, 3, make_truth(star, 0.5, -1.0), 1}),
                  std::domain_error);  // negative sigma
}

TEST_CASE("unit sphere sampling") {
  // d = 1: the 0-sphere.
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const Eigen::VectorXd v = sample_unit_sphere(1, seed);
    CHECK(std::fabs(v(0)) == 1.0);
  }
  // d = 3: deterministic unit vector.
  const Eigen::VectorXd u = sample_unit_sphere(3, 17);
  CHECK(u.cwiseEqual(sample_unit_sphere(3, 17)).all());
  CHECK(std::fabs(u.norm() - 1.0) <= 1e-15);

  // d = 50: the empirical mean of many draws concentrates near zero.
  mlr::Rng rng(91);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(50);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) mean += sample_unit_sphere(50, rng);
  mean /= static_cast<double>(draws);
  CHECK(mean.norm() <= 0.04);
}

TEST_CASE("initial vectors with a prescribed angle") {
  Eigen::VectorXd star(5);
  star << 2.0, -1.0, 0.5, 0.0, 1.5;
  const double norm = star.norm();

  // varphi0 = pi/2 returns the normalized target exactly.
  const Eigen::VectorXd aligned =
      sample_initial_with_angle(star, std::numbers::pi / 2.0, 3);
  CHECK(aligned.cwiseEqual(star / norm).all());

  const double varphi_a = std::atan(1.5);
  const Eigen::VectorXd a = sample_initial_with_angle(star, varphi_a, 11);
  CHECK(std::fabs(a.norm() - 1.0) <= 1e-14);
  const mlr::SuboptimalityAngles ang_a = mlr::suboptimality(a, star);
  CHECK(std::fabs(ang_a.varphi - varphi_a) <= 1e-12);
  CHECK(std::fabs(std::fabs(ang_a.rho) - 1.5 / std::sqrt(3.25)) <= 1e-12);
  CHECK(std::fabs(std::fabs(ang_a.rho) - 0.8320502943378437) <= 1e-12);

  const Eigen::VectorXd b = sample_initial_with_angle(star, 0.3, 12);
  const mlr::SuboptimalityAngles ang_b = mlr::suboptimality(b, star);
  CHECK(std::fabs(ang_b.varphi - 0.3) <= 1e-12);
  CHECK(std::fabs(std::fabs(ang_b.rho) - std::sin(0.3)) <= 1e-12);
  CHECK(std::fabs(std::fabs(ang_b.rho) - 0.29552020666133955) <= 1e-12);

  CHECK_THROWS_AS(sample_initial_with_angle(star, 0.0, 1), std::domain_error);
  CHECK_THROWS_AS(sample_initial_with_angle(star, 1.8, 1), std::domain_error);
  CHECK_THROWS_AS(
      sample_initial_with_angle(Eigen::VectorXd::Zero(5), 0.3, 1),
      std::domain_error);
  Eigen::VectorXd d1(1);
  d1 << 2.0;
  CHECK_THROWS_AS(sample_initial_with_angle(d1, 0.3, 1), std::domain_error);
  CHECK(sample_initial_with_angle(d1, std::numbers::pi / 2.0, 1)(0) == 1.0);
}

TEST_CASE("empirical covariance stays near the identity") {
  Eigen::VectorXd star(5);
  star << 1.0, 0.0, 0.0, 0.0, 0.0;
  const mlr::Dataset data =
      generate({100000, 5, make_truth(star, 0.5, 1.0), 31337});
  const Eigen::MatrixXd cov =
      data.x.transpose() * data.x / static_cast<double>(data.size());
  const Eigen::MatrixXd dev = cov - Eigen::MatrixXd::Identity(5, 5);
  const double norm = spectral_norm_power_iteration(dev, 8);
  CHECK(norm <= 0.05);
  CHECK(norm > 0.0);  // sanity: the estimate is alive
}

TEST_CASE("noiseless labels are recoverable from signs") {
  Eigen::VectorXd star(3);
  star << 0.3, 0.9, -0.6;
  const mlr::Dataset data = generate({500, 3, make_truth(star, 0.4, 0.0), 77});
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double proj = data.x.row(i).dot(star);
    if (proj == 0.0) continue;  // probability-zero tie
    const double expected = data.z(i) == 1 ? 1.0 : -1.0;
    CHECK(mlr::sgn(data.y(i)) * mlr::sgn(proj) == expected);
  }
}

}  // TEST_SUITE
