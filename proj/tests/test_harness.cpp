#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spud/harness.hpp"

using namespace spud;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("spud_test_" + std::to_string(mix64(reinterpret_cast<std::uintptr_t>(this))));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

ExperimentConfig small_config(const fs::path& dir) {
  ExperimentConfig cfg;
  cfg.seed = 7;
  cfg.n_values = {3};
  cfg.p_values = {40};
  cfg.theta_values = {0.67};
  cfg.csv = (dir / "sweep.csv").string();
  return cfg;
}

}  // namespace

TEST_CASE("format_double is shortest round trip") {
  CHECK(format_double(0.25) == "0.25");
  CHECK(format_double(-1.0) == "-1");
  CHECK(format_double(0.1) == "0.1");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("rank-one trial recovers the single row") {
  ExperimentConfig cfg;
  cfg.seed = 1;
  cfg.dictionary = DictKind::Identity;
  const Cell cell{1, 4, 1.0, DistributionSpec::gaussian()};
  const auto rec = run_trial(cfg, cell, Variant::AllPairs, 0);
  CHECK(rec.full_recovery);
  CHECK(rec.rows_recovered == 1);
  CHECK(rec.a_error == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rec.ms_lp == 0.0);
}

TEST_CASE("trials are deterministic and records round trip") {
  ExperimentConfig cfg;
  cfg.seed = 3;
  const Cell cell{4, 60, 0.5, DistributionSpec::gaussian()};
  for (Variant v : {Variant::DC, Variant::AllPairs}) {
    const auto a = run_trial(cfg, cell, v, 2), b = run_trial(cfg, cell, v, 2);
    CHECK(format_record(a) == format_record(b));
    CHECK(format_record(parse_record(format_record(a))) == format_record(a));
    CHECK(a.rows_recovered <= 4);
    CHECK(a.full_recovery == (a.rows_recovered == 4 && a.status == RecoveryStatus::Complete));
  }
  // Both variants see the same data.
  CHECK(make_trial_data(cfg, cell, 2).y == make_trial_data(cfg, cell, 2).y);
  CHECK_FALSE(make_trial_data(cfg, cell, 2).y == make_trial_data(cfg, cell, 3).y);
  CHECK_THROWS_AS(parse_record("allpairs,1,2"), IoError);
}

TEST_CASE("dictionary error is invariant under relabeling and scaling") {
  const Matrix a{{1.0, 2.0, 0.0}, {0.0, 1.0, 3.0}, {1.0, 0.0, 1.0}};
  Matrix b(3, 3);
  // Columns permuted (2, 0, 1) and scaled by (-2, 0.5, 4).
  const std::size_t perm[3] = {2, 0, 1};
  const double scale[3] = {-2.0, 0.5, 4.0};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) b(i, j) = scale[j] * a(i, perm[j]);
  CHECK(dictionary_error(a, b) == doctest::Approx(0.0).epsilon(1e-14));
  Matrix c = b;
  c(0, 0) += 0.1;
  CHECK(dictionary_error(a, c) > 0.0);
  CHECK_THROWS_AS(dictionary_error(a, Matrix(2, 2)), DimensionError);
}

TEST_CASE("sweep writes one row per trial and is idempotent") {
  TempDir tmp;
  auto cfg = small_config(tmp.path);
  SweepOptions quiet{false, false};
  phase_sweep(cfg, quiet);
  const std::string first = slurp(cfg.csv);
  CHECK(lines(first) == 2);
  CHECK(first.rfind(std::string(kTrialCsvHeader) + "\n", 0) == 0);
  CHECK(fs::exists(cfg.summary_path()));

  phase_sweep(cfg, quiet);
  CHECK(slurp(cfg.csv) == first);

  cfg.trials = 2;
  cfg.variants = {Variant::DC, Variant::AllPairs};
  phase_sweep(cfg, quiet);
  const std::string grown = slurp(cfg.csv);
  CHECK(lines(grown) == 5);

  fs::remove(cfg.csv);
  phase_sweep(cfg, quiet);
  CHECK(slurp(cfg.csv) == grown);
}

TEST_CASE("sweep output does not depend on the thread count") {
  TempDir tmp;
  auto cfg = small_config(tmp.path);
  cfg.trials = 4;
  cfg.p_values = {30, 41};
  cfg.threads = 1;
  phase_sweep(cfg, {false, false});
  const std::string one = slurp(cfg.csv);
  fs::remove(cfg.csv);
  cfg.threads = 3;
  phase_sweep(cfg, {false, false});
  CHECK(slurp(cfg.csv) == one);
}

TEST_CASE("guardrail and io errors") {
  ExperimentConfig cfg;
  cfg.seed = 1;
  cfg.p_values = {1500};
  CHECK_THROWS_AS(check_guardrail(cfg, false), GuardrailError);
  CHECK_NOTHROW(check_guardrail(cfg, true));
  cfg.variants = {Variant::DC};
  CHECK_NOTHROW(check_guardrail(cfg, false));

  TempDir tmp;
  auto small = small_config(tmp.path);
  small.csv = (tmp.path / "missing_dir" / "x.csv").string();
  CHECK_THROWS_AS(phase_sweep(small, {false, false}), IoError);

  small = small_config(tmp.path);
  std::ofstream(small.csv) << "not,the,header\n";
  CHECK_THROWS_AS(phase_sweep(small, {false, false}), IoError);
}

TEST_CASE("bounds batch: theta = 0 gives W exactly 0 and vertex checks pass") {
  TempDir tmp;
  ExperimentConfig cfg;
  cfg.seed = 5;
  cfg.n_values = {4};
  cfg.p_values = {100};
  cfg.theta_values = {0.0, 0.3};
  cfg.dists = {DistributionSpec::rademacher()};
  cfg.bounds.w_trials = 4;
  cfg.bounds.mc_samples = 10000;
  cfg.bounds.directions = 0;
  cfg.bounds.partition_trials = 2;
  cfg.bounds.restricted_instances = 3;
  cfg.bounds.restricted_p = 200;
  cfg.bounds.restricted_theta = 0.1;
  cfg.csv = (tmp.path / "bounds.csv").string();
  bounds_batch(cfg, false);

  std::ifstream is(cfg.csv);
  std::string line;
  std::getline(is, line);
  CHECK(line == kBoundsCsvHeader);
  std::size_t w_zero = 0, marginal = 0, restricted = 0;
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    REQUIRE(f.size() == 10);
    if (f[0] == "w" && f[3] == "0") {
      CHECK(f[6] == "0");
      ++w_zero;
    }
    if (f[0] == "marginal" && f[3] == "0.3") {
      CHECK(f[9] == "1");
      ++marginal;
    }
    restricted += f[0] == "restricted";
  }
  CHECK(w_zero == 4);
  CHECK(marginal == 8);
  CHECK(restricted == 3);
}
