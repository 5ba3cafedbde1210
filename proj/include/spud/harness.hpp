#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "spud/config.hpp"
#include "spud/model.hpp"
#include "spud/spud.hpp"

namespace spud {

/// Refusal to start an all-pairs run larger than the desk-scale limit.
class GuardrailError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// All-pairs runs above this many subproblems need an explicit override.
constexpr std::size_t kMaxPairsWithoutForce = 1000000;

struct Cell {
  std::size_t n = 0, p = 0;
  double theta = 0.0;
  DistributionSpec dist;
};

struct TrialData {
  ModelParams params;
  Dictionary a;
  CoefficientMatrix x;
  Matrix y;
};

/// The data of trial `trial` in `cell`; independent of the variant, so DC and
/// all-pairs runs of the same trial see the same instance.
TrialData make_trial_data(const ExperimentConfig& cfg, const Cell& cell, std::size_t trial);

struct TrialRecord {
  Variant variant = Variant::AllPairs;
  std::size_t n = 0, p = 0;
  double theta = 0.0;
  std::string dist;
  std::uint64_t seed = 0;
  std::size_t trial = 0;
  std::size_t rows_recovered = 0;
  bool full_recovery = false;
  double a_error = -1.0;  // -1 when no dictionary was reconstructed
  std::size_t candidates = 0;
  std::size_t skipped = 0;
  long lp_pivots_total = 0;
  double ms_gen = 0.0, ms_lp = 0.0, ms_greedy = 0.0;

  // Not part of the CSV row.
  RecoveryStatus status = RecoveryStatus::RankDeficient;
  double recon_residual = -1.0;  // ||A_hat X_hat - Y||_inf when Complete
  double y_max = 0.0;
};

extern const char* const kTrialCsvHeader;

/// Relative Frobenius error ||A - A_hat P L|| / ||A|| after matching columns
/// greedily by absolute normalized correlation and fitting one scale per
/// column.
double dictionary_error(const Matrix& a, const Matrix& a_hat);

TrialRecord run_trial(const ExperimentConfig& cfg, const Cell& cell, Variant variant,
                      std::size_t trial);

std::string format_record(const TrialRecord& r);
TrialRecord parse_record(const std::string& line);

struct SweepOptions {
  bool force = false;
  bool progress = true;  // stderr progress lines
};

/// Throws GuardrailError when an all-pairs cell exceeds kMaxPairsWithoutForce
/// and `force` is off.
void check_guardrail(const ExperimentConfig& cfg, bool force);

/// Runs every (variant, n, p, theta, dist) cell, skipping cells whose trials
/// are already in the output file, then rewrites the CSV sorted and writes the
/// per-cell summary. Returns the records of the final file.
std::vector<TrialRecord> phase_sweep(const ExperimentConfig& cfg, const SweepOptions& opts = {});

extern const char* const kBoundsCsvHeader;

/// Runs the configured lemma and concentration checks over the model grid and
/// writes one CSV row per check instance.
void bounds_batch(const ExperimentConfig& cfg, bool progress = true);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace spud
