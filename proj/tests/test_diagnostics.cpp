#include <doctest.h>

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mlr/datagen.hpp"
#include "mlr/diagnostics.hpp"
#include "mlr/model.hpp"
#include "mlr/population.hpp"
#include "mlr/rng.hpp"

namespace diag = mlr::diagnostics;
using mlr::GroundTruth;
using mlr::MixingState;

namespace {

constexpr double kPi = std::numbers::pi;

GroundTruth make_truth(Eigen::VectorXd star, double p1, double sigma) {
  return {std::move(star), mlr::mixing_from_probability(p1), sigma};
}

}  // namespace

TEST_SUITE("diagnostics") {

TEST_CASE("sign-product expectation closed form") {
  const Eigen::Vector2d e1(1.0, 0.0);
  const Eigen::Vector2d diag_dir(std::sqrt(2.0) / 2.0, std::sqrt(2.0) / 2.0);

  // 45 degrees: varphi = pi/4, so the expectation is exactly 1/2.
  CHECK(std::fabs(diag::grothendieck_expectation(diag_dir, e1) - 0.5) <=
        1e-15);
  // Collinear, orthogonal, anti-collinear.
  CHECK(diag::grothendieck_expectation(e1, e1) == 1.0);
  CHECK(diag::grothendieck_expectation(Eigen::Vector2d(0.0, 3.0), e1) == 0.0);
  CHECK(diag::grothendieck_expectation((-2.0 * e1).eval(), e1) == -1.0);

  CHECK_THROWS_AS(
      diag::grothendieck_expectation(Eigen::Vector2d::Zero(), e1),
      std::domain_error);
  CHECK_THROWS_AS(
      diag::grothendieck_expectation(Eigen::Vector3d(1.0, 0.0, 0.0), e1),
      std::domain_error);
}

TEST_CASE("absolute-quadratic expectation closed form") {
  const Eigen::Vector2d e1(1.0, 0.0);
  const Eigen::Vector2d diag_dir(std::sqrt(2.0) / 2.0, std::sqrt(2.0) / 2.0);

  // ||theta*|| ||theta|| (2/pi)(varphi sin varphi + cos varphi) at pi/4.
  CHECK(std::fabs(diag::abs_quadratic_expectation(diag_dir, e1) -
                  0.8037115486718268) <= 1e-15);
  // Collinear: (2/pi)(pi/2) * 2 = 2; orthogonal: 2/pi.
  CHECK(std::fabs(diag::abs_quadratic_expectation((2.0 * e1).eval(), e1) -
                  2.0) <= 1e-14);
  CHECK(std::fabs(diag::abs_quadratic_expectation(Eigen::Vector2d(0.0, 1.0),
                                                  e1) -
                  2.0 / kPi) <= 1e-15);
}

TEST_CASE("identities agree with their Monte-Carlo routes") {
  mlr::Rng rng(321);
  for (int d : {2, 5, 13}) {
    CAPTURE(d);
    const Eigen::VectorXd star =
        1.7 * mlr::datagen::sample_unit_sphere(d, rng);
    const Eigen::VectorXd theta =
        0.6 * mlr::datagen::sample_unit_sphere(d, rng);

    const diag::McEstimate ms = diag::mc_sign_product(
        theta, star, 200000, 7000 + static_cast<std::uint64_t>(d));
    CHECK(std::fabs(ms.mean(0) -
                    diag::grothendieck_expectation(theta, star)) <=
          4.0 * ms.std_error(0));

    const diag::McEstimate mq = diag::mc_abs_quadratic(
        theta, star, 200000, 7100 + static_cast<std::uint64_t>(d));
    CHECK(std::fabs(mq.mean(0) -
                    diag::abs_quadratic_expectation(theta, star)) <=
          4.0 * mq.std_error(0));
    CHECK(mq.std_error(0) > 0.0);
  }
}

TEST_CASE("Monte-Carlo estimates are seed-deterministic") {
  const Eigen::Vector2d e1(1.0, 0.0);
  const Eigen::Vector2d diag_dir(std::sqrt(2.0) / 2.0, std::sqrt(2.0) / 2.0);

  const diag::McEstimate a = diag::mc_sign_product(diag_dir, e1, 10001, 99);
  const diag::McEstimate b = diag::mc_sign_product(diag_dir, e1, 10001, 99);
  CHECK(a.mean(0) == b.mean(0));
  CHECK(a.std_error(0) == b.std_error(0));
  CHECK(a.n_draws == 10001);  // odd count survives the shard split
  CHECK(a.seed == 99);
  CHECK(a.n_shards >= 1);

  const diag::McEstimate c = diag::mc_sign_product(diag_dir, e1, 10001, 100);
  CHECK(a.mean(0) != c.mean(0));

  CHECK_THROWS_AS(diag::mc_sign_product(diag_dir, e1, 0, 1),
                  std::domain_error);
}

TEST_CASE("standard error halves when draws quadruple") {
  const Eigen::Vector2d e1(1.0, 0.0);
  const Eigen::Vector2d diag_dir(std::sqrt(2.0) / 2.0, std::sqrt(2.0) / 2.0);
  const diag::McEstimate small = diag::mc_sign_product(diag_dir, e1, 50000, 5);
  const diag::McEstimate big = diag::mc_sign_product(diag_dir, e1, 200000, 6);
  CHECK(std::fabs(big.std_error(0) / small.std_error(0) - 0.5) <= 0.1);
}

TEST_CASE("population oracle matches the noiseless closed form") {
  const int d = 3;
  Eigen::VectorXd star(d);
  star << 1.5, 0.0, -0.5;
  const GroundTruth truth = make_truth(star, 0.7, 0.0);
  Eigen::VectorXd theta(d);
  theta << 0.4, 0.8, 0.3;

  const auto [m, n] = diag::mc_population_oracle(
      theta, mlr::mixing_from_probability(0.7).nu(), truth, 0.0, 400000, 17);
  const mlr::population::PopulationUpdate limit =
      mlr::population::update_noiseless(theta, truth);
  for (int j = 0; j < d; ++j) {
    CAPTURE(j);
    CHECK(std::fabs(m.mean(j) - limit.theta_next(j)) <=
          4.0 * m.std_error(j));
  }
  CHECK(std::fabs(n.mean(0) - limit.tanh_nu_next) <= 4.0 * n.std_error(0));

  CHECK_THROWS_AS(
      diag::mc_population_oracle(theta, 0.0, truth, -1.0, 1000, 1),
      std::domain_error);
  CHECK_THROWS_AS(diag::mc_population_oracle(Eigen::VectorXd::Zero(d), 0.0,
                                             truth, 0.0, 1000, 1),
                  std::domain_error);
}

TEST_CASE("trajectories sit on the limiting cycloid") {
  const int d = 4;
  Eigen::VectorXd star(d);
  star << 2.0, -1.0, 0.5, 0.0;
  const GroundTruth truth = make_truth(star, 0.6, 0.0);
  const Eigen::VectorXd theta0 =
      1.3 * mlr::datagen::sample_initial_with_angle(star, 0.4, 23);

  const mlr::EmRun run =
      mlr::population::iterate_noiseless(theta0, truth, 40, 1e-9);
  const diag::CycloidResidual res = diag::cycloid_residual(run, theta0, star);
  CHECK(res.max_in_plane <= 1e-10);
  CHECK(res.max_out_of_plane <= 1e-10);

  // In d = 2 the plane is the whole space.
  Eigen::VectorXd star2(2), theta02(2);
  star2 << 1.0, 0.5;
  theta02 << -0.2, 0.9;
  const mlr::EmRun run2 = mlr::population::iterate_noiseless(
      theta02, make_truth(star2, 0.5, 0.0), 40, 1e-9);
  const diag::CycloidResidual res2 =
      diag::cycloid_residual(run2, theta02, star2);
  CHECK(res2.max_in_plane <= 1e-10);
  CHECK(res2.max_out_of_plane <= 1e-12);

  CHECK_THROWS_AS(diag::cycloid_residual(run, (2.0 * star).eval(), star),
                  std::domain_error);
}

TEST_CASE("convergence exponent of exact squaring") {
  const diag::LogLogFit fit =
      diag::convergence_exponent({2.0, 4.0, 16.0, 256.0, 65536.0});
  CHECK(std::fabs(fit.slope - 2.0) <= 1e-12);
  CHECK(std::fabs(fit.intercept) <= 1e-12);
}

TEST_CASE("convergence exponent of the angle recurrence") {
  // Seeded at tan varphi = 1.5 for four steps; the least-squares slope of
  // this specific five-point series is pinned from an independent
  // evaluation.
  std::vector<double> series;
  double tan = 1.5;
  for (int t = 0; t <= 4; ++t) {
    series.push_back((kPi / 2.0) * (tan - kPi / 4.0));
    tan = mlr::population::recurrence_tan(tan, std::atan(tan));
  }
  const diag::LogLogFit fit = diag::convergence_exponent(series);
  CHECK(std::fabs(fit.slope - 1.8311108274499786) <= 1e-9);
}

TEST_CASE("convergence exponent input validation") {
  CHECK_THROWS_AS(diag::convergence_exponent({1.0, 2.0}), std::domain_error);
  CHECK_THROWS_AS(diag::convergence_exponent({1.0, 0.0, 2.0}),
                  std::domain_error);
  CHECK_THROWS_AS(diag::convergence_exponent({1.0, -2.0, 3.0}),
                  std::domain_error);
  // Constant series: the abscissae are degenerate, no slope exists.
  CHECK_THROWS_AS(diag::convergence_exponent({3.0, 3.0, 3.0}),
                  std::domain_error);
}

TEST_CASE("error metrics") {
  const Eigen::Vector2d star(1.0, 2.0);
  CHECK(diag::theta_relative_error(Eigen::Vector2d(-1.0, -2.0), star, -1.0) ==
        0.0);
  CHECK(std::fabs(diag::theta_relative_error(Eigen::Vector2d(-1.0, -2.0),
                                             star, 1.0) -
                  2.0) <= 1e-15);
  CHECK_THROWS_AS(
      diag::theta_relative_error(star, Eigen::Vector2d::Zero(), 1.0),
      std::domain_error);
  CHECK_THROWS_AS(diag::theta_relative_error(Eigen::Vector3d::Zero(), star,
                                             1.0),
                  std::domain_error);

  const MixingState pi6 = mlr::mixing_from_probability(0.6);
  const MixingState pi7 = mlr::mixing_from_probability(0.7);
  CHECK(std::fabs(diag::pi_l1_error(pi6, pi7, 1.0) - 0.2) <= 1e-15);
  CHECK(std::fabs(diag::pi_l1_error(pi6, pi7, -1.0) - 0.6) <= 1e-15);
  CHECK(diag::pi_l1_error(MixingState{1.0}, MixingState{0.0}, 1.0) == 1.0);
  // Matches the l1 distance of the probability pairs.
  CHECK(std::fabs(diag::pi_l1_error(pi6, pi7, 1.0) -
                  (std::fabs(pi6.pi1() - pi7.pi1()) +
                   std::fabs(pi6.pi2() - pi7.pi2()))) <= 1e-15);
}

}  // TEST_SUITE
