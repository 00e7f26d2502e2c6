#include "mlr/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>

#include "mlr/population.hpp"

namespace mlr::diagnostics {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kShards = 8;  // fixed, so results never depend on hardware
constexpr double kClamp = 50.0;

double clamped_tanh(double arg) {
  if (arg >= kClamp) return 1.0;
  if (arg <= -kClamp) return -1.0;
  return std::tanh(arg);
}

// Runs n_draws of a sampler over kShards independent substreams, combining
// the per-shard moment sums in shard order; the estimate is therefore
// identical no matter how the shards are scheduled.  `make_drawer` builds a
// per-shard callable (so drawers can carry scratch buffers).
template <class Factory>
McEstimate mc_run(int dim_out, long long n_draws, std::uint64_t seed,
                  Factory&& make_drawer) {
  if (n_draws <= 0)
    throw std::domain_error("mc_run: n_draws must be positive");
  struct Moments {
    Eigen::VectorXd sum, sumsq;
  };
  std::vector<Moments> acc(
      static_cast<std::size_t>(kShards),
      {Eigen::VectorXd::Zero(dim_out), Eigen::VectorXd::Zero(dim_out)});
  const Rng base(seed);
  auto work = [&](int s) {
    auto drawer = make_drawer();
    Rng rng = base.split(static_cast<std::uint64_t>(s));
    const long long count =
        n_draws / kShards + (s < n_draws % kShards ? 1 : 0);
    Eigen::VectorXd sample(dim_out);
    Moments& m = acc[static_cast<std::size_t>(s)];
    for (long long i = 0; i < count; ++i) {
      drawer(rng, sample);
      m.sum += sample;
      m.sumsq += sample.cwiseProduct(sample);
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(kShards - 1);
  for (int s = 1; s < kShards; ++s) pool.emplace_back(work, s);
  work(0);
  for (auto& t : pool) t.join();

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim_out);
  Eigen::VectorXd sumsq = Eigen::VectorXd::Zero(dim_out);
  for (const Moments& m : acc) {
    sum += m.sum;
    sumsq += m.sumsq;
  }
  McEstimate out;
  out.n_draws = n_draws;
  out.seed = seed;
  out.n_shards = kShards;
  const double n = static_cast<double>(n_draws);
  out.mean = sum / n;
  out.std_error = Eigen::VectorXd::Zero(dim_out);
  if (n_draws >= 2) {
    for (int j = 0; j < dim_out; ++j) {
      const double var =
          std::max(0.0, (sumsq(j) - n * out.mean(j) * out.mean(j)) / (n - 1.0));
      out.std_error(j) = std::sqrt(var / n);
    }
  }
  return out;
}

void check_pair(const Eigen::VectorXd& theta,
                const Eigen::VectorXd& theta_star, const char* who) {
  if (theta.norm() == 0.0 || theta_star.norm() == 0.0)
    throw std::domain_error(std::string(who) + ": zero vector");
  if (theta.size() != theta_star.size())
    throw std::domain_error(std::string(who) + ": dimension mismatch");
}

}  // namespace

double grothendieck_expectation(const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& theta_star) {
  check_pair(theta, theta_star, "grothendieck_expectation");
  const SuboptimalityAngles ang = suboptimality(theta, theta_star);
  return ang.sign_rho * ang.varphi / (kPi / 2.0);
}

double abs_quadratic_expectation(const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& theta_star) {
  check_pair(theta, theta_star, "abs_quadratic_expectation");
  const SuboptimalityAngles ang = suboptimality(theta, theta_star);
  return theta.norm() * theta_star.norm() * (2.0 / kPi) *
         (ang.varphi * std::sin(ang.varphi) + std::cos(ang.varphi));
}

std::pair<McEstimate, McEstimate> mc_population_oracle(
    const Eigen::VectorXd& theta, double nu, const GroundTruth& truth,
    double sigma, long long n_draws, std::uint64_t seed) {
  check_pair(theta, truth.theta_star, "mc_population_oracle");
  if (sigma < 0.0)
    throw std::domain_error("mc_population_oracle: sigma must be >= 0");
  const int d = static_cast<int>(theta.size());
  const double pi1 = truth.pi_star.pi1();
  const double inv_s2 = sigma > 0.0 ? 1.0 / (sigma * sigma) : 0.0;

  // One pass computes both integrands: components 0..d-1 are the M sample,
  // component d is the N sample.  Per-draw order (label, covariates, noise)
  // matches datagen::sample.
  auto factory = [&]() {
    return [&, x = Eigen::VectorXd(d)](Rng& rng,
                                       Eigen::VectorXd& out) mutable {
      const bool first = rng.uniform() < pi1;
      for (int j = 0; j < d; ++j) x(j) = rng.gaussian();
      const double eps = rng.gaussian();
      const double signal = (first ? 1.0 : -1.0) * x.dot(truth.theta_star);
      const double proj = x.dot(theta);
      if (sigma > 0.0) {
        const double y = signal + sigma * eps;
        const double w = clamped_tanh(nu + y * proj * inv_s2);
        out.head(d) = (w * y) * x;
        out(d) = w;
      } else {
        const double s = sgn(proj);
        out.head(d) = (s * std::fabs(signal)) * x;
        out(d) = sgn(signal) * s;
      }
    };
  };
  const McEstimate joint = mc_run(d + 1, n_draws, seed, factory);
  McEstimate m{joint.mean.head(d), joint.std_error.head(d), joint.n_draws,
               joint.seed, joint.n_shards};
  McEstimate nn{joint.mean.tail(1), joint.std_error.tail(1), joint.n_draws,
                joint.seed, joint.n_shards};
  return {std::move(m), std::move(nn)};
}

McEstimate mc_sign_product(const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& theta_star,
                           long long n_draws, std::uint64_t seed) {
  check_pair(theta, theta_star, "mc_sign_product");
  const int d = static_cast<int>(theta.size());
  auto factory = [&]() {
    return [&, x = Eigen::VectorXd(d)](Rng& rng,
                                       Eigen::VectorXd& out) mutable {
      for (int j = 0; j < d; ++j) x(j) = rng.gaussian();
      out(0) = sgn(x.dot(theta_star)) * sgn(x.dot(theta));
    };
  };
  return mc_run(1, n_draws, seed, factory);
}

McEstimate mc_abs_quadratic(const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& theta_star,
                            long long n_draws, std::uint64_t seed) {
  check_pair(theta, theta_star, "mc_abs_quadratic");
  const int d = static_cast<int>(theta.size());
  auto factory = [&]() {
    return [&, x = Eigen::VectorXd(d)](Rng& rng,
                                       Eigen::VectorXd& out) mutable {
      for (int j = 0; j < d; ++j) x(j) = rng.gaussian();
      out(0) = std::fabs(x.dot(theta_star) * x.dot(theta));
    };
  };
  return mc_run(1, n_draws, seed, factory);
}

CycloidResidual cycloid_residual(const EmRun& run,
                                 const Eigen::VectorXd& theta0,
                                 const Eigen::VectorXd& theta_star) {
  check_pair(theta0, theta_star, "cycloid_residual");
  const double ns = theta_star.norm();
  const Eigen::VectorXd e1 = theta_star / ns;
  const double along0 = theta0.dot(e1);
  const Eigen::VectorXd perp0 = theta0 - along0 * e1;
  const double n0 = perp0.norm();
  // Collinear inputs leave only rounding residue in perp0; normalizing that
  // residue would fabricate an arbitrary plane direction.
  if (n0 <= 1e-12 * theta0.norm())
    throw std::domain_error(
        "cycloid_residual: theta0 collinear with theta_star, plane undefined");
  const Eigen::VectorXd e2 = perp0 / n0;
  const double sign0 = sgn(along0);

  CycloidResidual res;
  const int last = std::min<int>(run.terminated_at,
                                 static_cast<int>(run.thetas.size()) - 1);
  for (int t = 1; t <= last; ++t) {
    const Eigen::VectorXd& th = run.thetas[static_cast<std::size_t>(t)];
    const Eigen::Vector2d ref = population::cycloid_point(
        run.angles[static_cast<std::size_t>(t - 1)].phi, sign0);
    const double xt = th.dot(e1) / ns;
    const double yt = th.dot(e2) / ns;
    res.max_in_plane = std::max(res.max_in_plane,
                                std::hypot(xt - ref.x(), yt - ref.y()));
    const double out_of_plane =
        (th - th.dot(e1) * e1 - th.dot(e2) * e2).norm() / ns;
    res.max_out_of_plane = std::max(res.max_out_of_plane, out_of_plane);
  }
  return res;
}

LogLogFit convergence_exponent(const std::vector<double>& series) {
  if (series.size() < 3)
    throw std::domain_error("convergence_exponent: need at least 3 points");
  for (double s : series)
    if (!(s > 0.0))
      throw std::domain_error(
          "convergence_exponent: series must be strictly positive");
  const std::size_t m = series.size() - 1;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    const double x = std::log(series[t]);
    const double y = std::log(series[t + 1]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(m);
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0)
    throw std::domain_error("convergence_exponent: degenerate abscissae");
  LogLogFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

double theta_relative_error(const Eigen::VectorXd& theta,
                            const Eigen::VectorXd& theta_star, double sign) {
  const double ns = theta_star.norm();
  if (ns == 0.0)
    throw std::domain_error("theta_relative_error: zero theta_star");
  if (theta.size() != theta_star.size())
    throw std::domain_error("theta_relative_error: dimension mismatch");
  return (theta - sign * theta_star).norm() / ns;
}

double pi_l1_error(const MixingState& pi, const MixingState& pi_star,
                   double sign_rho0) {
  return std::fabs(pi.tanh_nu - sign_rho0 * pi_star.tanh_nu);
}

}  // namespace mlr::diagnostics
