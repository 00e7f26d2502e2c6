#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

// End-to-end checks of the mlr-em binary.  CTest exports MLR_EM_BIN with the
// freshly built executable path; every invocation goes through the shell so
// the exit-code mapping (0 success, 1 compute/validation failure, 2
// configuration error) is exercised exactly as a user would see it.

namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* env = std::getenv("MLR_EM_BIN");
  REQUIRE_MESSAGE(env != nullptr,
                  "MLR_EM_BIN must point at the built mlr-em binary");
  return std::string(env);
}

int run(const std::string& args) {
  const std::string cmd = "\"" + binary() + "\" " + args;
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path("cli_scratch") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), "missing file: " << p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// name -> full content for every regular file directly inside dir.
std::map<std::string, std::string> dir_contents(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file())
      out[entry.path().filename().string()] = slurp(entry.path());
  return out;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes") {
  const fs::path dir = scratch("exit_codes");
  CHECK(run("--help > /dev/null") == 0);
  CHECK(run("--no-such-flag > /dev/null 2>&1") == 2);
  CHECK(run("> /dev/null 2>&1") == 2);  // a subcommand is required
  CHECK(run("frobnicate > /dev/null 2>&1") == 2);
  // Well-formed flags, invalid configuration: d must be >= 2.
  CHECK(run("trajectory --d 1 --out " + (dir / "t").string() +
            " > /dev/null 2>&1") == 2);
}

TEST_CASE("validate writes a report and gates on failures") {
  const fs::path dir = scratch("validate");
  const fs::path good = dir / "good";
  CHECK(run("validate --mc-draws 20000 --seed 3 --out " + good.string() +
            " > /dev/null 2>&1") == 0);
  const std::string report = slurp(good / "validate_report.csv");
  CHECK(report.find("check_name,value,reference,tolerance,pass") == 0);
  CHECK(report.find(",true") != std::string::npos);
  CHECK(report.find(",false") == std::string::npos);

  // Sabotaged K0 must flip the gate: same suite, scaled Bessel kernel.
  const fs::path bad = dir / "bad";
  CHECK(run("validate --suite specfun --mc-draws 10000 --perturb-k0 0.99 "
            "--out " +
            bad.string() + " > /dev/null 2>&1") == 1);
  const std::string sabotaged = slurp(bad / "validate_report.csv");
  CHECK(sabotaged.find(",false") != std::string::npos);
}

TEST_CASE("dumped configuration round-trips") {
  const fs::path dir = scratch("config");
  const fs::path first = dir / "first.ini";
  const fs::path second = dir / "second.ini";
  const fs::path third = dir / "third.ini";
  CHECK(run("convergence --population-mode --seed 7 --iterations 6 "
            "--dump-config > " +
            first.string()) == 0);
  CHECK(run("--config " + first.string() + " convergence --dump-config > " +
            second.string()) == 0);
  CHECK(run("--config " + second.string() + " convergence --dump-config > " +
            third.string()) == 0);
  // The first feed-back re-serializes defaults (vector quoting, float
  // precision); from then on the dump is a fixed point of dump->parse->dump.
  CHECK(slurp(second) == slurp(third));
  const std::string text = slurp(second);
  CHECK(text.find("convergence.seed=7") != std::string::npos);
  CHECK(text.find("convergence.iterations=6") != std::string::npos);
  CHECK(text.find("convergence.population-mode=true") != std::string::npos);
}

TEST_CASE("config sections feed values without selecting a command") {
  const fs::path dir = scratch("config_sections");
  const fs::path ini = dir / "multi.ini";
  {
    std::ofstream out(ini);
    out << "[convergence]\nseed=7\n\n[mixing]\nd=3\nseed=9\n";
  }
  const std::string tail = " --n 120 --trials 2 --iterations 2 --out ";
  const fs::path from_config = dir / "from_config";
  const fs::path log = dir / "stdout.txt";
  CHECK(run("--config " + ini.string() + " mixing" + tail +
            from_config.string() + " > " + log.string()) == 0);
  // The [convergence] section must not hijack the invoked command.
  CHECK(slurp(log).find("mixing[") != std::string::npos);

  const fs::path explicit_flags = dir / "explicit_flags";
  CHECK(run("mixing --d 3 --seed 9" + tail + explicit_flags.string() +
            " > /dev/null") == 0);
  CHECK(dir_contents(from_config) == dir_contents(explicit_flags));
}

TEST_CASE("reruns and thread counts are byte-identical") {
  const fs::path dir = scratch("determinism");
  const std::string common =
      "mixing --d 3 --snr 50 --n 200 --trials 4 --iterations 4 --seed 13 ";
  const fs::path a = dir / "a", b = dir / "b", c = dir / "c";
  CHECK(run(common + "--threads 1 --out " + a.string() + " > /dev/null") == 0);
  CHECK(run(common + "--threads 1 --out " + b.string() + " > /dev/null") == 0);
  CHECK(run(common + "--threads 3 --out " + c.string() + " > /dev/null") == 0);

  const auto fa = dir_contents(a), fb = dir_contents(b), fc = dir_contents(c);
  REQUIRE(fa.size() >= 2);  // at least a curve and a meta file
  CHECK(fa == fb);
  CHECK(fa == fc);
}

TEST_CASE("population-mode convergence prints slopes") {
  const fs::path dir = scratch("population_mode");
  const fs::path out = dir / "run";
  const fs::path log = dir / "stdout.txt";
  CHECK(run("convergence --population-mode --seed 1 --out " + out.string() +
            " > " + log.string()) == 0);
  const std::string text = slurp(log);
  CHECK(text.find("slope=") != std::string::npos);
  CHECK(text.find("min_log_ratio=") != std::string::npos);
  CHECK(fs::exists(out / "convergence_curve.csv"));
  CHECK(fs::exists(out / "convergence_fit.csv"));
  CHECK(fs::exists(out / "convergence_meta.txt"));
}

}  // TEST_SUITE
