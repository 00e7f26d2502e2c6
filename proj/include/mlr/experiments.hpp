// Experiment harness: the four data-driven studies behind the mlr-em CLI.
//
// Each run_* function validates its config, executes the trials on a worker
// pool, writes CSV files plus a plain-text metadata sidecar into out_dir, and
// returns a small summary struct for programmatic checks.  All outputs are
// deterministic for a fixed seed: trials draw from per-trial substreams and
// rows are buffered and written in trial-index order, so thread scheduling
// cannot reorder anything.  Numbers are formatted with the shortest
// round-trip representation (csv.hpp), which makes runs byte-reproducible.
#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mlr/diagnostics.hpp"

namespace mlr::experiments {

// Finite-sample EM trajectories on the plane span{theta0, theta*} against
// the analytic cycloid.  The sampling protocol follows the figure being
// reproduced and is keyed on the dimension:
//   d == 2  : theta* = (1, 0), pi* = {0.7, 0.3}, theta0 uniform on [-2, 2]^2
//   d == 3  : theta* and theta0 uniform on the unit sphere
//   d >= 4  : theta* and theta0 standard Gaussian
// pi0 (and pi* for d != 2) has first weight uniform on [0, 1].
struct TrajectoryConfig {
  int d = 2;
  double snr = 1e8;
  int n = 5000;
  int trials = 60;
  int iterations = 100;
  std::uint64_t seed = 1;
  bool exact_noiseless = false;  // sigma = 0 data + sign-based EM steps
  int threads = 0;               // 0 = hardware concurrency
};

struct TrajectorySummary {
  int trials = 0;
  double median_max_in_plane = 0.0;
  double median_max_out_of_plane = 0.0;
  double median_final_theta_rel_err = 0.0;
  double median_final_pi_l1_err = 0.0;
  std::vector<std::filesystem::path> files;
};

TrajectorySummary run_trajectory(const TrajectoryConfig& cfg,
                                 const std::filesystem::path& out_dir);

// Quadratic-convergence study: s^t = (pi/2)(tan varphi^t - pi/4) averaged
// over trials for each SNR, then fitted on log-log pairs.  population_mode
// replaces the data runs with the exact angle recurrence (no data, single
// deterministic series; iterations capped at 9 before tan overflows).
struct ConvergenceConfig {
  int d = 50;
  std::vector<double> snr_list = {1e6, 1e7, 1e8};
  double varphi0 = 0.9827937232473291;  // arctan(1.5)
  int n = 5000;
  int trials = 50;
  int iterations = 4;
  std::uint64_t seed = 1;
  bool population_mode = false;
  bool exact_noiseless = false;
  int threads = 0;
};

struct ConvergenceFit {
  std::string label;           // "1e+06", ... or "population"
  std::vector<double> mean_s;  // one entry per iterate 0..T (finite prefix)
  diagnostics::LogLogFit fit;  // OLS of log s^{t+1} on log s^t
  double min_log_ratio = 0.0;  // min_t log s^{t+1} / log s^t
};

struct ConvergenceSummary {
  std::vector<ConvergenceFit> series;
  std::vector<std::filesystem::path> files;
};

ConvergenceSummary run_convergence(const ConvergenceConfig& cfg,
                                   const std::filesystem::path& out_dir);

// Mixing-error/angle correlation: per-iteration pairs
// (pi/2 - varphi^{t-1}, ||pi^t - pibar*||_1) pooled across trials, with the
// fitted line and Pearson correlation per SNR.  The predicted slope is
// (2/pi)·||1/2 - pi*||_1.
struct MixingConfig {
  int d = 50;
  std::vector<double> snr_list = {1e8};
  double varphi0 = 0.3;
  double pi1_star = 0.7;
  int n = 5000;
  int trials = 50;
  int iterations = 8;
  std::uint64_t seed = 1;
  bool exact_noiseless = false;
  int threads = 0;
};

struct MixingFit {
  std::string label;
  double slope = 0.0;
  double intercept = 0.0;
  double pearson = 0.0;
  double predicted_slope = 0.0;
  long long n_pairs = 0;
};

struct MixingSummary {
  std::vector<MixingFit> series;
  std::vector<std::filesystem::path> files;
};

MixingSummary run_mixing(const MixingConfig& cfg,
                         const std::filesystem::path& out_dir);

// Estimation error vs iteration for several true mixing weights.  All
// pi*-blocks of one trial share the same substream (common random numbers),
// so the theta-error comparison isolates the effect of pi*.
struct WeightsCompareConfig {
  int d = 50;
  double snr = 1e8;
  double varphi0 = 0.3;
  std::vector<double> pi1_star_list = {0.6, 0.8, 1.0};
  int n = 5000;
  int trials = 50;
  int iterations = 10;
  std::uint64_t seed = 1;
  bool exact_noiseless = false;
  int threads = 0;
};

struct WeightsCompareSummary {
  std::vector<double> pi1_star;
  // [block][t], t = 0..iterations (padded with the last live iterate)
  std::vector<std::vector<double>> mean_theta_err;
  std::vector<std::vector<double>> median_theta_err;
  std::vector<std::vector<double>> mean_pi_err;
  std::vector<std::vector<double>> median_pi_err;
  // max over t >= 1 and block pairs of the mean theta-error ratio
  double max_pointwise_theta_ratio = 0.0;
  std::vector<std::filesystem::path> files;
};

WeightsCompareSummary run_weights_compare(const WeightsCompareConfig& cfg,
                                          const std::filesystem::path& out_dir);

}  // namespace mlr::experiments
