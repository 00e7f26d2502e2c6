// mlr-em: command-line harness for the 2MLR EM experiments.
//
// Usage: mlr-em <trajectory|convergence|mixing|weights-compare|validate>
//               [--config file.ini] [per-command options]
//
// Exit codes: 0 success, 1 validation/compute failure, 2 configuration error.
// Every command is deterministic for a fixed --seed: rerunning writes
// byte-identical CSV and metadata files.
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mlr/csv.hpp"
#include "mlr/experiments.hpp"
#include "mlr/specfun.hpp"
#include "mlr/validate.hpp"

namespace {

void add_common(CLI::App* cmd, int* trials, int* iterations,
                std::uint64_t* seed, int* threads, bool* exact_noiseless,
                std::string* out_dir) {
  cmd->add_option("--trials", *trials, "number of independent trials")
      ->capture_default_str();
  cmd->add_option("--iterations", *iterations, "EM iterations per trial")
      ->capture_default_str();
  cmd->add_option("--seed", *seed, "master seed (trials use substreams)")
      ->capture_default_str();
  cmd->add_option("--threads", *threads,
                  "worker threads (0 = hardware concurrency)")
      ->capture_default_str();
  cmd->add_flag("--exact-noiseless", *exact_noiseless,
                "sigma = 0 data and sign-based EM steps instead of a finite "
                "SNR");
  cmd->add_option("--out", *out_dir, "output directory")
      ->capture_default_str();
}

void print_files(const std::vector<std::filesystem::path>& files) {
  for (const auto& f : files) std::cout << "wrote: " << f.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "mlr-em: EM for symmetric two-component mixed linear regression — "
      "closed-form population updates, finite-sample experiments, and a "
      "cross-validation suite"};
  app.require_subcommand(1);
  app.set_config("--config", "",
                 "INI config file; sections [trajectory], [convergence], "
                 "[mixing], [weights-compare], [validate] hold the "
                 "per-command keys");
  bool dump_config = false;
  app.add_flag("--dump-config", dump_config,
               "print the resolved configuration (parseable as a config "
               "file) and exit");

  using mlr::experiments::ConvergenceConfig;
  using mlr::experiments::MixingConfig;
  using mlr::experiments::TrajectoryConfig;
  using mlr::experiments::WeightsCompareConfig;

  TrajectoryConfig tj;
  std::string tj_out = "mlr_out";
  CLI::App* cmd_tj = app.add_subcommand(
      "trajectory",
      "finite-sample EM iterates on span{theta0, theta*} vs the cycloid");
  cmd_tj->fallthrough();
  cmd_tj->add_option("--d", tj.d,
                     "dimension; 2 and 3 select the matching sampling "
                     "protocol, anything larger uses Gaussian draws")
      ->capture_default_str();
  cmd_tj->add_option("--snr", tj.snr, "signal-to-noise ratio ||theta*||/sigma")
      ->capture_default_str();
  cmd_tj->add_option("--n", tj.n, "samples per trial")->capture_default_str();
  add_common(cmd_tj, &tj.trials, &tj.iterations, &tj.seed, &tj.threads,
             &tj.exact_noiseless, &tj_out);

  ConvergenceConfig cv;
  std::string cv_out = "mlr_out";
  CLI::App* cmd_cv = app.add_subcommand(
      "convergence", "log-log fit of s^t = (pi/2)(tan varphi^t - pi/4)");
  cmd_cv->fallthrough();
  cmd_cv->add_option("--d", cv.d, "dimension")->capture_default_str();
  cmd_cv->add_option("--snr", cv.snr_list, "SNR values (one series each)")
      ->capture_default_str();
  cmd_cv->add_option("--varphi0", cv.varphi0,
                     "initial angle; tan(varphi0) must exceed pi/4")
      ->capture_default_str();
  cmd_cv->add_option("--n", cv.n, "samples per trial")->capture_default_str();
  cmd_cv->add_flag("--population-mode", cv.population_mode,
                   "run the exact angle recurrence instead of data "
                   "(single deterministic series, iterations <= 9)");
  add_common(cmd_cv, &cv.trials, &cv.iterations, &cv.seed, &cv.threads,
             &cv.exact_noiseless, &cv_out);

  MixingConfig mx;
  std::string mx_out = "mlr_out";
  CLI::App* cmd_mx = app.add_subcommand(
      "mixing",
      "per-iteration pairs (pi/2 - varphi^{t-1}, ||pi^t - pibar*||_1) and "
      "their fitted line");
  cmd_mx->fallthrough();
  cmd_mx->add_option("--d", mx.d, "dimension")->capture_default_str();
  cmd_mx->add_option("--snr", mx.snr_list, "SNR values (one series each)")
      ->capture_default_str();
  cmd_mx->add_option("--varphi0", mx.varphi0, "initial angle in (0, pi/2]")
      ->capture_default_str();
  cmd_mx->add_option("--pi1-star", mx.pi1_star,
                     "true first mixing weight in [0, 1]")
      ->capture_default_str();
  cmd_mx->add_option("--n", mx.n, "samples per trial")->capture_default_str();
  add_common(cmd_mx, &mx.trials, &mx.iterations, &mx.seed, &mx.threads,
             &mx.exact_noiseless, &mx_out);

  WeightsCompareConfig wc;
  std::string wc_out = "mlr_out";
  CLI::App* cmd_wc = app.add_subcommand(
      "weights-compare",
      "estimation error vs iteration across several true mixing weights");
  cmd_wc->fallthrough();
  cmd_wc->add_option("--d", wc.d, "dimension")->capture_default_str();
  cmd_wc->add_option("--snr", wc.snr, "signal-to-noise ratio")
      ->capture_default_str();
  cmd_wc->add_option("--varphi0", wc.varphi0, "initial angle in (0, pi/2]")
      ->capture_default_str();
  cmd_wc->add_option("--pi1-star", wc.pi1_star_list,
                     "true first mixing weights, one curve per value")
      ->capture_default_str();
  cmd_wc->add_option("--n", wc.n, "samples per trial")->capture_default_str();
  add_common(cmd_wc, &wc.trials, &wc.iterations, &wc.seed, &wc.threads,
             &wc.exact_noiseless, &wc_out);

  mlr::validate::Options vo;
  std::string v_suite = "all";
  std::string v_out = "mlr_out";
  double v_k0_scale = 1.0;
  CLI::App* cmd_v = app.add_subcommand(
      "validate", "run the specfun/population/diagnostics invariant suites");
  cmd_v->fallthrough();
  cmd_v->add_option("--suite", v_suite, "which suite to run")
      ->check(CLI::IsMember({"all", "specfun", "population", "diagnostics"}))
      ->capture_default_str();
  cmd_v->add_option("--mc-draws", vo.mc_draws,
                    "Monte-Carlo draws per oracle check (tolerances scale "
                    "with the resulting standard errors)")
      ->capture_default_str();
  cmd_v->add_option("--seed", vo.seed, "seed for the Monte-Carlo substreams")
      ->capture_default_str();
  cmd_v->add_option("--out", v_out, "output directory")
      ->capture_default_str();
  cmd_v->add_option("--perturb-k0", v_k0_scale,
                    "test-harness hook: scale bessel_k0 by this factor "
                    "(a correct build passes only at 1.0)")
      ->capture_default_str();
  cmd_v->add_option("--quad-abs-tol", vo.quad.abs_tol,
                    "quadrature absolute tolerance")
      ->capture_default_str();
  cmd_v->add_option("--quad-rel-tol", vo.quad.rel_tol,
                    "quadrature relative tolerance")
      ->capture_default_str();
  cmd_v->add_option("--quad-max-subdivisions", vo.quad.max_subdivisions,
                    "quadrature panel budget")
      ->capture_default_str();
  cmd_v->add_option("--quad-truncation-exponent",
                    vo.quad.truncation_exponent,
                    "decay exponent at which semi-infinite tails are cut")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (dump_config) {
    std::cout << app.config_to_str(true, true);
    return 0;
  }

  try {
    if (cmd_tj->parsed()) {
      const auto s = mlr::experiments::run_trajectory(tj, tj_out);
      std::cout << "trajectory: trials=" << s.trials
                << " median_max_in_plane="
                << mlr::csv::format_double(s.median_max_in_plane)
                << " median_max_out_of_plane="
                << mlr::csv::format_double(s.median_max_out_of_plane)
                << " median_final_theta_rel_err="
                << mlr::csv::format_double(s.median_final_theta_rel_err)
                << "\n";
      print_files(s.files);
    } else if (cmd_cv->parsed()) {
      const auto s = mlr::experiments::run_convergence(cv, cv_out);
      for (const auto& f : s.series)
        std::cout << "convergence[" << f.label
                  << "]: slope=" << mlr::csv::format_double(f.fit.slope)
                  << " intercept="
                  << mlr::csv::format_double(f.fit.intercept)
                  << " min_log_ratio="
                  << mlr::csv::format_double(f.min_log_ratio) << "\n";
      print_files(s.files);
    } else if (cmd_mx->parsed()) {
      const auto s = mlr::experiments::run_mixing(mx, mx_out);
      for (const auto& f : s.series)
        std::cout << "mixing[" << f.label
                  << "]: slope=" << mlr::csv::format_double(f.slope)
                  << " predicted="
                  << mlr::csv::format_double(f.predicted_slope)
                  << " pearson=" << mlr::csv::format_double(f.pearson)
                  << " pairs=" << f.n_pairs << "\n";
      print_files(s.files);
    } else if (cmd_wc->parsed()) {
      const auto s = mlr::experiments::run_weights_compare(wc, wc_out);
      std::cout << "weights-compare: max_pointwise_theta_ratio="
                << mlr::csv::format_double(s.max_pointwise_theta_ratio)
                << "\n";
      for (std::size_t b = 0; b < s.pi1_star.size(); ++b)
        std::cout << "weights-compare[pi1=" <<
            mlr::csv::format_double(s.pi1_star[b])
                  << "]: final_median_theta_err="
                  << mlr::csv::format_double(s.median_theta_err[b].back())
                  << " final_median_pi_err="
                  << mlr::csv::format_double(s.median_pi_err[b].back())
                  << "\n";
      print_files(s.files);
    } else if (cmd_v->parsed()) {
      mlr::specfun::set_bessel_k0_scale(v_k0_scale);
      std::vector<mlr::validate::CheckRow> rows;
      auto append = [&rows](std::vector<mlr::validate::CheckRow> r) {
        rows.insert(rows.end(), r.begin(), r.end());
      };
      if (v_suite == "all" || v_suite == "specfun")
        append(mlr::validate::specfun_suite(vo));
      if (v_suite == "all" || v_suite == "population")
        append(mlr::validate::population_suite(vo));
      if (v_suite == "all" || v_suite == "diagnostics")
        append(mlr::validate::diagnostics_suite(vo));
      const std::string report = mlr::validate::to_csv(rows);
      std::cout << report;
      std::filesystem::create_directories(v_out);
      const std::filesystem::path report_path =
          std::filesystem::path(v_out) / "validate_report.csv";
      std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
      if (!out) throw std::runtime_error("cannot open " + report_path.string());
      out << report;
      int failed = 0;
      for (const auto& r : rows) failed += r.pass ? 0 : 1;
      std::cerr << "validate: " << rows.size() << " checks, " << failed
                << " failed\n";
      if (failed > 0) return 1;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
