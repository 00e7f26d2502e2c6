#include "mlr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>

#include <Eigen/Core>

#include "mlr/csv.hpp"
#include "mlr/datagen.hpp"
#include "mlr/finite.hpp"
#include "mlr/model.hpp"
#include "mlr/population.hpp"
#include "mlr/rng.hpp"

namespace mlr::experiments {
namespace {

constexpr double kPi = std::numbers::pi;

int resolve_threads(int requested, int trials) {
  int t = requested > 0 ? requested
                        : static_cast<int>(std::thread::hardware_concurrency());
  if (t < 1) t = 1;
  return std::min(t, std::max(trials, 1));
}

// Runs body(trial) for trial = 0..trials-1 on a small pool.  Workers pull
// indices from an atomic counter; each body writes only its own result slot,
// so the output is independent of scheduling.
void parallel_trials(int trials, int threads,
                     const std::function<void(int)>& body) {
  threads = resolve_threads(threads, trials);
  if (threads == 1) {
    for (int i = 0; i < trials; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= trials) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads) - 1);
  for (int k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double pearson = 0.0;
};

LineFit least_squares(const std::vector<double>& xs,
                      const std::vector<double>& ys) {
  const std::size_t n = xs.size();
  if (n < 2 || ys.size() != n)
    throw std::invalid_argument("least_squares: need >= 2 paired points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (!(sxx > 0.0))
    throw std::invalid_argument("least_squares: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.pearson = syy > 0.0 ? sxy / std::sqrt(sxx * syy) : 0.0;
  return f;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string fmt(double v) { return csv::format_double(v); }
std::string fmt(int v) { return csv::format_int(v); }
std::string fmt(std::uint64_t v) { return csv::format_uint(v); }

void meta_line(std::string& meta, const char* key, const std::string& value) {
  meta += key;
  meta += ": ";
  meta += value;
  meta += '\n';
}

double sigma_for(const Eigen::VectorXd& theta_star, double snr,
                 bool exact_noiseless) {
  return exact_noiseless ? 0.0 : theta_star.norm() / snr;
}

void check_common(int d, int n, int trials, int iterations, double snr,
                  bool exact_noiseless) {
  if (d < 2) throw std::invalid_argument("config: d must be >= 2");
  if (n < d) throw std::invalid_argument("config: n must be >= d");
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (iterations < 1)
    throw std::invalid_argument("config: iterations must be >= 1");
  if (!exact_noiseless && !(snr > 0.0 && std::isfinite(snr)))
    throw std::invalid_argument("config: snr must be positive and finite");
}

// Index clamp used when a run stopped early: the last live iterate stands in
// for the missing tail (exact at a fixed point).
template <class T>
const T& at_or_last(const std::vector<T>& v, int t) {
  const int last = static_cast<int>(v.size()) - 1;
  return v[static_cast<std::size_t>(std::min(t, last))];
}

struct TrialSetup {
  GroundTruth truth;
  Eigen::VectorXd theta0;
  MixingState pi0;
};

Eigen::VectorXd nonzero_gaussian(int d, Rng& rng) {
  for (;;) {
    Eigen::VectorXd v = datagen::gaussian_vector(d, rng);
    if (v.norm() > 0.0) return v;
  }
}

// theta0 draws are rejected while collinear with theta*: the trajectory
// plane span{theta0, theta*} must be two-dimensional.
bool collinear(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::VectorXd e1 = b / b.norm();
  return (a - a.dot(e1) * e1).norm() == 0.0;
}

TrialSetup trajectory_setup(int d, Rng& rng) {
  TrialSetup s;
  if (d == 2) {
    s.truth.theta_star = Eigen::Vector2d(1.0, 0.0);
    s.truth.pi_star = mixing_from_probability(0.7);
    do {
      s.theta0 = Eigen::Vector2d(-2.0 + 4.0 * rng.uniform(),
                                 -2.0 + 4.0 * rng.uniform());
    } while (s.theta0.norm() == 0.0 || collinear(s.theta0, s.truth.theta_star));
    s.pi0 = mixing_from_probability(rng.uniform());
    return s;
  }
  if (d == 3) {
    s.truth.theta_star = datagen::sample_unit_sphere(3, rng);
    s.truth.pi_star = mixing_from_probability(rng.uniform());
    do {
      s.theta0 = datagen::sample_unit_sphere(3, rng);
    } while (collinear(s.theta0, s.truth.theta_star));
    s.pi0 = mixing_from_probability(rng.uniform());
    return s;
  }
  s.truth.theta_star = nonzero_gaussian(d, rng);
  s.truth.pi_star = mixing_from_probability(rng.uniform());
  do {
    s.theta0 = nonzero_gaussian(d, rng);
  } while (collinear(s.theta0, s.truth.theta_star));
  s.pi0 = mixing_from_probability(rng.uniform());
  return s;
}

finite::EmConfig em_config(int iterations, bool exact_noiseless) {
  finite::EmConfig c;
  c.t_easy = 0;
  c.t_standard = iterations;
  c.sigma_mode = exact_noiseless ? finite::SigmaMode::exact_noiseless
                                 : finite::SigmaMode::finite_sigma;
  c.rel_tol = 0.0;  // run the full budget; only an exact fixed point stops
  return c;
}

std::string protocol_text(int d) {
  if (d == 2)
    return "theta* = (1,0), pi* = {0.7,0.3}, theta0 ~ U[-2,2]^2, "
           "pi0(1) ~ U[0,1]";
  if (d == 3)
    return "theta* ~ unit sphere, pi*(1) ~ U[0,1], theta0 ~ unit sphere, "
           "pi0(1) ~ U[0,1]";
  return "theta* ~ N(0,I), pi*(1) ~ U[0,1], theta0 ~ N(0,I), pi0(1) ~ U[0,1]";
}

}  // namespace

TrajectorySummary run_trajectory(const TrajectoryConfig& cfg,
                                 const std::filesystem::path& out_dir) {
  check_common(cfg.d, cfg.n, cfg.trials, cfg.iterations, cfg.snr,
               cfg.exact_noiseless);

  struct TrialOut {
    std::string rows;  // trajectory_trials.csv chunk
    std::string summary_row;
    double max_in_plane = 0.0;
    double max_out_of_plane = 0.0;
    double final_theta = 0.0;
    double final_pi = 0.0;
  };
  std::vector<TrialOut> out(static_cast<std::size_t>(cfg.trials));

  parallel_trials(cfg.trials, cfg.threads, [&](int trial) {
    Rng rng = Rng(cfg.seed).split(static_cast<std::uint64_t>(trial));
    TrialSetup s = trajectory_setup(cfg.d, rng);
    s.truth.sigma = sigma_for(s.truth.theta_star, cfg.snr,
                              cfg.exact_noiseless);
    const Dataset data = datagen::sample(s.truth, cfg.n, rng,
                                         static_cast<std::uint64_t>(trial));
    const EmRun run = finite::run_pipeline(
        data, s.theta0, s.pi0, em_config(cfg.iterations, cfg.exact_noiseless));

    const double ns = s.truth.theta_star.norm();
    const Eigen::VectorXd e1 = s.truth.theta_star / ns;
    const double along0 = s.theta0.dot(e1);
    Eigen::VectorXd e2 = s.theta0 - along0 * e1;
    e2 /= e2.norm();
    const double sign0 = sgn(along0);

    TrialOut& to = out[static_cast<std::size_t>(trial)];
    const int last = run.terminated_at;
    for (int t = 0; t <= last; ++t) {
      const Eigen::VectorXd& th = run.thetas[static_cast<std::size_t>(t)];
      const double x = th.dot(e1) / ns;
      const double y = th.dot(e2) / ns;
      const double oop =
          (th - th.dot(e1) * e1 - th.dot(e2) * e2).norm() / ns;
      const auto& a = run.angles[static_cast<std::size_t>(t)];
      to.rows += fmt(trial); to.rows += ',';
      to.rows += fmt(t); to.rows += ',';
      to.rows += fmt(x); to.rows += ',';
      to.rows += fmt(y); to.rows += ',';
      to.rows += fmt(oop); to.rows += ',';
      to.rows += fmt(a.rho); to.rows += ',';
      to.rows += fmt(a.varphi); to.rows += ',';
      to.rows += fmt(a.phi); to.rows += ',';
      to.rows += fmt(run.theta_rel_err[static_cast<std::size_t>(t)]);
      to.rows += ',';
      to.rows += fmt(run.pi_l1_err[static_cast<std::size_t>(t)]);
      to.rows += ',';
      to.rows += fmt(run.tanh_nus[static_cast<std::size_t>(t)]);
      to.rows += '\n';
      if (t >= 1) {
        const Eigen::Vector2d ref = population::cycloid_point(
            run.angles[static_cast<std::size_t>(t - 1)].phi, sign0);
        to.max_in_plane = std::max(to.max_in_plane,
                                   std::hypot(x - ref.x(), y - ref.y()));
        to.max_out_of_plane = std::max(to.max_out_of_plane, oop);
      }
    }
    to.final_theta = run.theta_rel_err[static_cast<std::size_t>(last)];
    to.final_pi = run.pi_l1_err[static_cast<std::size_t>(last)];

    std::string& sr = to.summary_row;
    sr += fmt(trial); sr += ',';
    sr += fmt(cfg.d); sr += ',';
    sr += fmt(cfg.n); sr += ',';
    sr += fmt(cfg.snr); sr += ',';
    sr += fmt(s.truth.pi_star.pi1()); sr += ',';
    sr += fmt(s.truth.pi_star.tanh_nu); sr += ',';
    sr += fmt(run.angles.front().rho); sr += ',';
    sr += fmt(sign0); sr += ',';
    sr += fmt(last); sr += ',';
    sr += to_string(run.reason); sr += ',';
    sr += fmt(to.max_in_plane); sr += ',';
    sr += fmt(to.max_out_of_plane); sr += ',';
    sr += fmt(to.final_theta); sr += ',';
    sr += fmt(to.final_pi); sr += '\n';
  });

  std::filesystem::create_directories(out_dir);
  TrajectorySummary summary;
  summary.trials = cfg.trials;

  std::string trials_csv =
      "trial,t,x,y,out_of_plane,rho,varphi,phi,theta_rel_err,pi_l1_err,"
      "tanh_nu\n";
  std::string summary_csv =
      "trial,d,n,snr,pi1_star,tanh_nu_star,rho0,sign_rho0,terminated_at,"
      "reason,max_in_plane,max_out_of_plane,final_theta_rel_err,"
      "final_pi_l1_err\n";
  std::vector<double> v_in, v_oop, v_th, v_pi;
  for (const TrialOut& to : out) {
    trials_csv += to.rows;
    summary_csv += to.summary_row;
    v_in.push_back(to.max_in_plane);
    v_oop.push_back(to.max_out_of_plane);
    v_th.push_back(to.final_theta);
    v_pi.push_back(to.final_pi);
  }
  summary.median_max_in_plane = median(v_in);
  summary.median_max_out_of_plane = median(v_oop);
  summary.median_final_theta_rel_err = median(v_th);
  summary.median_final_pi_l1_err = median(v_pi);

  std::string cycloid_csv = "phi,x,y\n";
  for (int k = 0; k < 500; ++k) {
    const double phi = kPi * static_cast<double>(k) / 499.0;
    const Eigen::Vector2d p = population::cycloid_point(phi, 1.0);
    cycloid_csv += fmt(phi); cycloid_csv += ',';
    cycloid_csv += fmt(p.x()); cycloid_csv += ',';
    cycloid_csv += fmt(p.y()); cycloid_csv += '\n';
  }

  std::string meta;
  meta_line(meta, "command", "trajectory");
  meta_line(meta, "d", fmt(cfg.d));
  meta_line(meta, "snr", fmt(cfg.snr));
  meta_line(meta, "n", fmt(cfg.n));
  meta_line(meta, "trials", fmt(cfg.trials));
  meta_line(meta, "iterations", fmt(cfg.iterations));
  meta_line(meta, "seed", fmt(cfg.seed));
  meta_line(meta, "exact_noiseless", cfg.exact_noiseless ? "1" : "0");
  meta_line(meta, "protocol", protocol_text(cfg.d));
  meta_line(meta, "plane", "x,y in units of ||theta*|| on span{theta*, "
                           "theta0}; cycloid.csv is the sign(rho0) = +1 "
                           "branch, mirror x for sign(rho0) = -1");
  meta_line(meta, "median_max_in_plane", fmt(summary.median_max_in_plane));
  meta_line(meta, "median_max_out_of_plane",
            fmt(summary.median_max_out_of_plane));
  meta_line(meta, "median_final_theta_rel_err",
            fmt(summary.median_final_theta_rel_err));
  meta_line(meta, "median_final_pi_l1_err",
            fmt(summary.median_final_pi_l1_err));

  const struct {
    const char* name;
    const std::string* body;
  } files[] = {
      {"trajectory_trials.csv", &trials_csv},
      {"trajectory_cycloid.csv", &cycloid_csv},
      {"trajectory_summary.csv", &summary_csv},
      {"trajectory_meta.txt", &meta},
  };
  for (const auto& f : files) {
    const std::filesystem::path p = out_dir / f.name;
    write_file(p, *f.body);
    summary.files.push_back(p);
  }
  return summary;
}

ConvergenceSummary run_convergence(const ConvergenceConfig& cfg,
                                   const std::filesystem::path& out_dir) {
  if (!(cfg.varphi0 > 0.0 && cfg.varphi0 < kPi / 2.0))
    throw std::invalid_argument("config: varphi0 must lie in (0, pi/2)");
  if (!(std::tan(cfg.varphi0) > kPi / 4.0))
    throw std::invalid_argument(
        "config: tan(varphi0) must exceed pi/4 so the fitted quantity is "
        "positive");
  ConvergenceSummary summary;

  if (cfg.population_mode) {
    if (cfg.iterations < 2 || cfg.iterations > 9)
      throw std::invalid_argument(
          "config: population_mode needs 2 <= iterations <= 9 (tan varphi "
          "overflows past 9 doublings)");
    ConvergenceFit f;
    f.label = "population";
    double tan = std::tan(cfg.varphi0);
    for (int t = 0; t <= cfg.iterations; ++t) {
      f.mean_s.push_back((kPi / 2.0) * (tan - kPi / 4.0));
      tan = population::recurrence_tan(tan, std::atan(tan));
    }
    f.fit = diagnostics::convergence_exponent(f.mean_s);
    f.min_log_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t + 1 < f.mean_s.size(); ++t)
      f.min_log_ratio = std::min(
          f.min_log_ratio,
          std::log(f.mean_s[t + 1]) / std::log(f.mean_s[t]));
    summary.series.push_back(std::move(f));
  } else {
    if (cfg.snr_list.empty())
      throw std::invalid_argument("config: snr_list must not be empty");
    check_common(cfg.d, cfg.n, cfg.trials, cfg.iterations,
                 cfg.snr_list.front(), cfg.exact_noiseless);
    for (double snr : cfg.snr_list)
      if (!cfg.exact_noiseless && !(snr > 0.0 && std::isfinite(snr)))
        throw std::invalid_argument("config: snr must be positive and finite");

    for (std::size_t si = 0; si < cfg.snr_list.size(); ++si) {
      const double snr = cfg.snr_list[si];
      std::vector<std::vector<double>> s_per_trial(
          static_cast<std::size_t>(cfg.trials));
      parallel_trials(cfg.trials, cfg.threads, [&](int trial) {
        Rng rng = Rng(cfg.seed).split(si).split(
            static_cast<std::uint64_t>(trial));
        GroundTruth truth;
        truth.theta_star = datagen::sample_unit_sphere(cfg.d, rng);
        truth.pi_star = mixing_from_probability(rng.uniform());
        const Eigen::VectorXd theta0 = datagen::sample_initial_with_angle(
            truth.theta_star, cfg.varphi0, rng);
        const MixingState pi0 = mixing_from_probability(rng.uniform());
        truth.sigma = sigma_for(truth.theta_star, snr, cfg.exact_noiseless);
        const Dataset data = datagen::sample(
            truth, cfg.n, rng, static_cast<std::uint64_t>(trial));
        const EmRun run = finite::run_pipeline(
            data, theta0, pi0, em_config(cfg.iterations,
                                         cfg.exact_noiseless));
        std::vector<double>& s = s_per_trial[static_cast<std::size_t>(trial)];
        for (int t = 0; t <= cfg.iterations; ++t) {
          const double tan = stable_tan_varphi(at_or_last(run.thetas, t),
                                               truth.theta_star);
          s.push_back((kPi / 2.0) * (tan - kPi / 4.0));
        }
      });

      ConvergenceFit f;
      f.label = fmt(snr);
      for (int t = 0; t <= cfg.iterations; ++t) {
        double m = 0.0;
        for (const auto& s : s_per_trial)
          m += s[static_cast<std::size_t>(t)];
        f.mean_s.push_back(m / static_cast<double>(cfg.trials));
      }
      // The fit uses the longest prefix that stays positive and finite
      // (exact sign resolution can push tan varphi to infinity).
      std::vector<double> usable;
      for (double v : f.mean_s) {
        if (!(v > 0.0) || !std::isfinite(v)) break;
        usable.push_back(v);
      }
      if (usable.size() < 3)
        throw std::runtime_error(
            "convergence: fewer than 3 usable mean points for SNR " +
            f.label);
      f.fit = diagnostics::convergence_exponent(usable);
      f.min_log_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t t = 0; t + 1 < usable.size(); ++t)
        f.min_log_ratio =
            std::min(f.min_log_ratio,
                     std::log(usable[t + 1]) / std::log(usable[t]));
      summary.series.push_back(std::move(f));
    }
  }

  std::filesystem::create_directories(out_dir);
  std::string curve_csv = "label,t,mean_s\n";
  std::string fit_csv = "label,slope,intercept,min_log_ratio,n_points\n";
  for (const ConvergenceFit& f : summary.series) {
    for (std::size_t t = 0; t < f.mean_s.size(); ++t) {
      curve_csv += f.label; curve_csv += ',';
      curve_csv += fmt(static_cast<int>(t)); curve_csv += ',';
      curve_csv += fmt(f.mean_s[t]); curve_csv += '\n';
    }
    fit_csv += f.label; fit_csv += ',';
    fit_csv += fmt(f.fit.slope); fit_csv += ',';
    fit_csv += fmt(f.fit.intercept); fit_csv += ',';
    fit_csv += fmt(f.min_log_ratio); fit_csv += ',';
    fit_csv += fmt(static_cast<int>(f.mean_s.size())); fit_csv += '\n';
  }

  std::string meta;
  meta_line(meta, "command", "convergence");
  meta_line(meta, "population_mode", cfg.population_mode ? "1" : "0");
  meta_line(meta, "d", fmt(cfg.d));
  meta_line(meta, "varphi0", fmt(cfg.varphi0));
  meta_line(meta, "n", fmt(cfg.n));
  meta_line(meta, "trials", fmt(cfg.trials));
  meta_line(meta, "iterations", fmt(cfg.iterations));
  meta_line(meta, "seed", fmt(cfg.seed));
  meta_line(meta, "exact_noiseless", cfg.exact_noiseless ? "1" : "0");
  meta_line(meta, "statistic",
            "s^t = (pi/2)(tan varphi^t - pi/4), averaged over trials before "
            "taking logs; slope fits log s^{t+1} on log s^t");
  for (const ConvergenceFit& f : summary.series) {
    meta_line(meta, ("slope[" + f.label + "]").c_str(), fmt(f.fit.slope));
    meta_line(meta, ("min_log_ratio[" + f.label + "]").c_str(),
              fmt(f.min_log_ratio));
  }

  const std::filesystem::path p_curve = out_dir / "convergence_curve.csv";
  const std::filesystem::path p_fit = out_dir / "convergence_fit.csv";
  const std::filesystem::path p_meta = out_dir / "convergence_meta.txt";
  write_file(p_curve, curve_csv);
  write_file(p_fit, fit_csv);
  write_file(p_meta, meta);
  summary.files = {p_curve, p_fit, p_meta};
  return summary;
}

MixingSummary run_mixing(const MixingConfig& cfg,
                         const std::filesystem::path& out_dir) {
  if (cfg.snr_list.empty())
    throw std::invalid_argument("config: snr_list must not be empty");
  check_common(cfg.d, cfg.n, cfg.trials, cfg.iterations, cfg.snr_list.front(),
               cfg.exact_noiseless);
  for (double snr : cfg.snr_list)
    if (!cfg.exact_noiseless && !(snr > 0.0 && std::isfinite(snr)))
      throw std::invalid_argument("config: snr must be positive and finite");
  if (!(cfg.varphi0 > 0.0 && cfg.varphi0 <= kPi / 2.0))
    throw std::invalid_argument("config: varphi0 must lie in (0, pi/2]");
  if (!(cfg.pi1_star >= 0.0 && cfg.pi1_star <= 1.0))
    throw std::invalid_argument("config: pi1_star must lie in [0, 1]");

  MixingSummary summary;
  std::string pairs_csv = "label,trial,t,angle_gap,pi_l1_err\n";

  for (std::size_t si = 0; si < cfg.snr_list.size(); ++si) {
    const double snr = cfg.snr_list[si];
    struct TrialPairs {
      std::vector<double> xs, ys;
    };
    std::vector<TrialPairs> per_trial(static_cast<std::size_t>(cfg.trials));
    parallel_trials(cfg.trials, cfg.threads, [&](int trial) {
      Rng rng =
          Rng(cfg.seed).split(si).split(static_cast<std::uint64_t>(trial));
      GroundTruth truth;
      truth.theta_star = datagen::sample_unit_sphere(cfg.d, rng);
      truth.pi_star = mixing_from_probability(cfg.pi1_star);
      const Eigen::VectorXd theta0 = datagen::sample_initial_with_angle(
          truth.theta_star, cfg.varphi0, rng);
      const MixingState pi0 = mixing_from_probability(rng.uniform());
      truth.sigma = sigma_for(truth.theta_star, snr, cfg.exact_noiseless);
      const Dataset data = datagen::sample(truth, cfg.n, rng,
                                           static_cast<std::uint64_t>(trial));
      const EmRun run = finite::run_pipeline(
          data, theta0, pi0, em_config(cfg.iterations, cfg.exact_noiseless));
      TrialPairs& tp = per_trial[static_cast<std::size_t>(trial)];
      const int last = std::min(cfg.iterations, run.terminated_at);
      for (int t = 1; t <= last; ++t) {
        tp.xs.push_back(kPi / 2.0 -
                        run.angles[static_cast<std::size_t>(t - 1)].varphi);
        tp.ys.push_back(run.pi_l1_err[static_cast<std::size_t>(t)]);
      }
    });

    std::vector<double> xs, ys;
    const std::string label = fmt(snr);
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const TrialPairs& tp = per_trial[static_cast<std::size_t>(trial)];
      for (std::size_t k = 0; k < tp.xs.size(); ++k) {
        pairs_csv += label; pairs_csv += ',';
        pairs_csv += fmt(trial); pairs_csv += ',';
        pairs_csv += fmt(static_cast<int>(k + 1)); pairs_csv += ',';
        pairs_csv += fmt(tp.xs[k]); pairs_csv += ',';
        pairs_csv += fmt(tp.ys[k]); pairs_csv += '\n';
        xs.push_back(tp.xs[k]);
        ys.push_back(tp.ys[k]);
      }
    }
    const LineFit lf = least_squares(xs, ys);
    MixingFit mf;
    mf.label = label;
    mf.slope = lf.slope;
    mf.intercept = lf.intercept;
    mf.pearson = lf.pearson;
    mf.predicted_slope =
        (2.0 / kPi) * std::fabs(2.0 * cfg.pi1_star - 1.0);
    mf.n_pairs = static_cast<long long>(xs.size());
    summary.series.push_back(std::move(mf));
  }

  std::filesystem::create_directories(out_dir);
  std::string fit_csv = "label,slope,intercept,pearson,predicted_slope,"
                        "n_pairs\n";
  for (const MixingFit& f : summary.series) {
    fit_csv += f.label; fit_csv += ',';
    fit_csv += fmt(f.slope); fit_csv += ',';
    fit_csv += fmt(f.intercept); fit_csv += ',';
    fit_csv += fmt(f.pearson); fit_csv += ',';
    fit_csv += fmt(f.predicted_slope); fit_csv += ',';
    fit_csv += csv::format_int(f.n_pairs); fit_csv += '\n';
  }

  std::string meta;
  meta_line(meta, "command", "mixing");
  meta_line(meta, "d", fmt(cfg.d));
  meta_line(meta, "varphi0", fmt(cfg.varphi0));
  meta_line(meta, "pi1_star", fmt(cfg.pi1_star));
  meta_line(meta, "n", fmt(cfg.n));
  meta_line(meta, "trials", fmt(cfg.trials));
  meta_line(meta, "iterations", fmt(cfg.iterations));
  meta_line(meta, "seed", fmt(cfg.seed));
  meta_line(meta, "exact_noiseless", cfg.exact_noiseless ? "1" : "0");
  meta_line(meta, "pairs", "angle_gap = pi/2 - varphi^{t-1} against "
                           "pi_l1_err = ||pi^t - pibar*||_1; predicted slope "
                           "(2/pi)||1/2 - pi*||_1");
  for (const MixingFit& f : summary.series) {
    meta_line(meta, ("slope[" + f.label + "]").c_str(), fmt(f.slope));
    meta_line(meta, ("pearson[" + f.label + "]").c_str(), fmt(f.pearson));
  }

  const std::filesystem::path p_pairs = out_dir / "mixing_pairs.csv";
  const std::filesystem::path p_fit = out_dir / "mixing_fit.csv";
  const std::filesystem::path p_meta = out_dir / "mixing_meta.txt";
  write_file(p_pairs, pairs_csv);
  write_file(p_fit, fit_csv);
  write_file(p_meta, meta);
  summary.files = {p_pairs, p_fit, p_meta};
  return summary;
}

WeightsCompareSummary run_weights_compare(
    const WeightsCompareConfig& cfg, const std::filesystem::path& out_dir) {
  check_common(cfg.d, cfg.n, cfg.trials, cfg.iterations, cfg.snr,
               cfg.exact_noiseless);
  if (cfg.pi1_star_list.empty())
    throw std::invalid_argument("config: pi1_star_list must not be empty");
  for (double p : cfg.pi1_star_list)
    if (!(p >= 0.0 && p <= 1.0))
      throw std::invalid_argument("config: pi1_star entries must lie in "
                                  "[0, 1]");
  if (!(cfg.varphi0 > 0.0 && cfg.varphi0 <= kPi / 2.0))
    throw std::invalid_argument("config: varphi0 must lie in (0, pi/2]");

  const int blocks = static_cast<int>(cfg.pi1_star_list.size());
  const int T = cfg.iterations;
  // errs[block][trial][t]
  std::vector<std::vector<std::vector<double>>> theta_err(
      static_cast<std::size_t>(blocks)),
      pi_err(static_cast<std::size_t>(blocks));
  for (int b = 0; b < blocks; ++b) {
    theta_err[static_cast<std::size_t>(b)].resize(
        static_cast<std::size_t>(cfg.trials));
    pi_err[static_cast<std::size_t>(b)].resize(
        static_cast<std::size_t>(cfg.trials));
  }

  parallel_trials(cfg.trials, cfg.threads, [&](int trial) {
    Rng rng = Rng(cfg.seed).split(static_cast<std::uint64_t>(trial));
    const Eigen::VectorXd theta_star =
        datagen::sample_unit_sphere(cfg.d, rng);
    const Eigen::VectorXd theta0 = datagen::sample_initial_with_angle(
        theta_star, cfg.varphi0, rng);
    const MixingState pi0 = mixing_from_probability(rng.uniform());
    // One snapshot feeds every pi* block: identical covariates, noise, and
    // label uniforms (common random numbers), so only pi* differs.
    const Rng data_rng = rng;
    for (int b = 0; b < blocks; ++b) {
      GroundTruth truth;
      truth.theta_star = theta_star;
      truth.pi_star = mixing_from_probability(
          cfg.pi1_star_list[static_cast<std::size_t>(b)]);
      truth.sigma = sigma_for(theta_star, cfg.snr, cfg.exact_noiseless);
      const Dataset data = datagen::sample(truth, cfg.n, data_rng,
                                           static_cast<std::uint64_t>(trial));
      const EmRun run = finite::run_pipeline(
          data, theta0, pi0, em_config(T, cfg.exact_noiseless));
      std::vector<double>& te =
          theta_err[static_cast<std::size_t>(b)]
                   [static_cast<std::size_t>(trial)];
      std::vector<double>& pe =
          pi_err[static_cast<std::size_t>(b)][static_cast<std::size_t>(trial)];
      for (int t = 0; t <= T; ++t) {
        te.push_back(at_or_last(run.theta_rel_err, t));
        pe.push_back(at_or_last(run.pi_l1_err, t));
      }
    }
  });

  WeightsCompareSummary summary;
  summary.pi1_star = cfg.pi1_star_list;
  summary.mean_theta_err.resize(static_cast<std::size_t>(blocks));
  summary.median_theta_err.resize(static_cast<std::size_t>(blocks));
  summary.mean_pi_err.resize(static_cast<std::size_t>(blocks));
  summary.median_pi_err.resize(static_cast<std::size_t>(blocks));
  for (int b = 0; b < blocks; ++b) {
    for (int t = 0; t <= T; ++t) {
      std::vector<double> th, pi;
      th.reserve(static_cast<std::size_t>(cfg.trials));
      pi.reserve(static_cast<std::size_t>(cfg.trials));
      double sth = 0.0, spi = 0.0;
      for (int trial = 0; trial < cfg.trials; ++trial) {
        const double a = theta_err[static_cast<std::size_t>(b)]
                                  [static_cast<std::size_t>(trial)]
                                  [static_cast<std::size_t>(t)];
        const double c = pi_err[static_cast<std::size_t>(b)]
                               [static_cast<std::size_t>(trial)]
                               [static_cast<std::size_t>(t)];
        th.push_back(a);
        pi.push_back(c);
        sth += a;
        spi += c;
      }
      summary.mean_theta_err[static_cast<std::size_t>(b)].push_back(
          sth / static_cast<double>(cfg.trials));
      summary.median_theta_err[static_cast<std::size_t>(b)].push_back(
          median(th));
      summary.mean_pi_err[static_cast<std::size_t>(b)].push_back(
          spi / static_cast<double>(cfg.trials));
      summary.median_pi_err[static_cast<std::size_t>(b)].push_back(
          median(pi));
    }
  }

  // t = 0 is the shared start; the invariance claim concerns iterations.
  double max_ratio = 0.0;
  for (int t = 1; t <= T; ++t)
    for (int a = 0; a < blocks; ++a)
      for (int b = a + 1; b < blocks; ++b) {
        const double u = summary.mean_theta_err[static_cast<std::size_t>(a)]
                                               [static_cast<std::size_t>(t)];
        const double v = summary.mean_theta_err[static_cast<std::size_t>(b)]
                                               [static_cast<std::size_t>(t)];
        const double hi = std::max(u, v), lo = std::min(u, v);
        if (hi == 0.0) continue;  // both exactly converged
        max_ratio = std::max(
            max_ratio,
            lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
      }
  summary.max_pointwise_theta_ratio = max_ratio;

  std::filesystem::create_directories(out_dir);
  std::string curves_csv = "pi1_star,t,mean_theta_err,median_theta_err,"
                           "mean_pi_err,median_pi_err\n";
  for (int b = 0; b < blocks; ++b)
    for (int t = 0; t <= T; ++t) {
      const auto bb = static_cast<std::size_t>(b);
      const auto tt = static_cast<std::size_t>(t);
      curves_csv += fmt(cfg.pi1_star_list[bb]); curves_csv += ',';
      curves_csv += fmt(t); curves_csv += ',';
      curves_csv += fmt(summary.mean_theta_err[bb][tt]); curves_csv += ',';
      curves_csv += fmt(summary.median_theta_err[bb][tt]); curves_csv += ',';
      curves_csv += fmt(summary.mean_pi_err[bb][tt]); curves_csv += ',';
      curves_csv += fmt(summary.median_pi_err[bb][tt]); curves_csv += '\n';
    }

  std::string trials_csv = "pi1_star,trial,final_theta_rel_err,"
                           "final_pi_l1_err\n";
  for (int b = 0; b < blocks; ++b)
    for (int trial = 0; trial < cfg.trials; ++trial) {
      const auto bb = static_cast<std::size_t>(b);
      const auto rr = static_cast<std::size_t>(trial);
      trials_csv += fmt(cfg.pi1_star_list[bb]); trials_csv += ',';
      trials_csv += fmt(trial); trials_csv += ',';
      trials_csv += fmt(theta_err[bb][rr].back()); trials_csv += ',';
      trials_csv += fmt(pi_err[bb][rr].back()); trials_csv += '\n';
    }

  std::string meta;
  meta_line(meta, "command", "weights-compare");
  meta_line(meta, "d", fmt(cfg.d));
  meta_line(meta, "snr", fmt(cfg.snr));
  meta_line(meta, "varphi0", fmt(cfg.varphi0));
  {
    std::string lst;
    for (std::size_t i = 0; i < cfg.pi1_star_list.size(); ++i) {
      if (i) lst += ' ';
      lst += fmt(cfg.pi1_star_list[i]);
    }
    meta_line(meta, "pi1_star_list", lst);
  }
  meta_line(meta, "n", fmt(cfg.n));
  meta_line(meta, "trials", fmt(cfg.trials));
  meta_line(meta, "iterations", fmt(cfg.iterations));
  meta_line(meta, "seed", fmt(cfg.seed));
  meta_line(meta, "exact_noiseless", cfg.exact_noiseless ? "1" : "0");
  meta_line(meta, "coupling", "all pi* blocks of a trial reuse one substream "
                              "(common random numbers)");
  meta_line(meta, "max_pointwise_theta_ratio",
            fmt(summary.max_pointwise_theta_ratio));
  for (int b = 0; b < blocks; ++b) {
    const auto bb = static_cast<std::size_t>(b);
    meta_line(meta,
              ("final_median_pi_err[" + fmt(cfg.pi1_star_list[bb]) + "]")
                  .c_str(),
              fmt(summary.median_pi_err[bb].back()));
  }

  const std::filesystem::path p_curves = out_dir / "weights_compare_curves.csv";
  const std::filesystem::path p_trials = out_dir / "weights_compare_trials.csv";
  const std::filesystem::path p_meta = out_dir / "weights_compare_meta.txt";
  write_file(p_curves, curves_csv);
  write_file(p_trials, trials_csv);
  write_file(p_meta, meta);
  summary.files = {p_curves, p_trials, p_meta};
  return summary;
}

}  // namespace mlr::experiments
