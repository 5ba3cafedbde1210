#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "spud/analysis.hpp"
#include "spud/lp_solver.hpp"
#include "spud/model.hpp"

namespace spud {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Variant { DC, AllPairs };
std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);

struct BoundsConfig {
  std::vector<std::string> checks{"w", "marginal", "partition", "restricted"};
  std::size_t w_trials = 200;
  WMethod w_method = WMethod::VertexMax;
  std::size_t w_search_steps = 50;
  std::size_t w_mc_samples = 100000;
  std::size_t mc_samples = 100000;  // marginal lower bound
  std::size_t directions = 100;     // random directions besides the +-e_j
  std::size_t partition_trials = 10;
  /// |S| for the partition check; 0 selects the largest size below p/4.
  std::size_t partition_subset = 0;
  std::size_t restricted_instances = 100;
  std::size_t restricted_s = 4;
  std::size_t restricted_p = 2000;
  double restricted_theta = 0.015;
  double gamma = 0.5;
};

/// Flat "key = value" file with [section] headers; '#' starts a comment and
/// list values are comma separated. Sections and keys:
///
///   [run]     seed, variant (dc | allpairs, list allowed), trials, threads
///   [model]   n, p, theta, dist (lists allowed), dictionary, alpha
///   [solver]  method (dual | standard), feas_tol, opt_tol, reduced_cost_tol,
///             max_pivots, zero_tol, rank_tol, match_tol, dedup
///   [output]  csv, summary, timings
///   [bounds]  checks, w_trials, w_method, w_search_steps, w_mc_samples,
///             mc_samples, directions, partition_trials, partition_subset,
///             restricted_instances, restricted_s, restricted_p,
///             restricted_theta, gamma
///
/// Unknown sections or keys are errors.
struct ExperimentConfig {
  std::optional<std::uint64_t> seed;
  std::vector<Variant> variants{Variant::AllPairs};
  std::size_t trials = 1;
  int threads = 0;  // 0 keeps the OpenMP default

  std::vector<std::size_t> n_values{8};
  std::vector<std::size_t> p_values{100};
  std::vector<double> theta_values{0.25};
  std::vector<DistributionSpec> dists{DistributionSpec::gaussian()};
  DictKind dictionary = DictKind::GaussianInvertible;
  double alpha = 0.0;  // > 0 enables the 2/n <= theta <= alpha/sqrt(n) check

  SolverOptions solver;
  double zero_tol = 1e-8;
  double rank_tol = 1e-9;
  double match_tol = 1e-6;
  bool dedup = true;

  std::string csv = "results.csv";
  std::string summary;  // empty: "<csv>.summary.csv"
  bool timings = false;

  BoundsConfig bounds;

  std::uint64_t require_seed() const;
  std::string summary_path() const;
};

ExperimentConfig parse_config(std::istream& is);
ExperimentConfig load_config(const std::string& path);
/// Cross-field checks (non-empty grids, trials >= 1, theta range, ...).
void validate(const ExperimentConfig& cfg);

}  // namespace spud
