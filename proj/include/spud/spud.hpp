#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <vector>

#include "spud/lp_solver.hpp"
#include "spud/numerics.hpp"

namespace spud {

class ZeroCandidate : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

constexpr std::size_t kNoGroup = std::numeric_limits<std::size_t>::max();

/// One proposed row s = w^T Y, produced from the constraint r = y_i + y_j.
struct Candidate {
  std::size_t i = 0, j = 0;     // source columns, i < j
  std::size_t group = kNoGroup;  // pairing group for the DC variant
  Vector w;
  Vector s;
  std::size_t l0 = 0;
  double objective = 0.0;  // LP optimum before normalization
};

struct SpudOptions {
  SolverOptions solver;
  /// Entries with |s_k| > zero_tol * max|s| count toward l0.
  double zero_tol = 1e-8;
  /// Drop candidates whose normalized s repeats an earlier one (values
  /// compared at 12 decimal digits). The first occurrence is kept.
  bool dedup = true;
  /// Rank tolerance of the greedy gate.
  double rank_tol = 1e-9;
};

struct CandidateSet {
  std::vector<Candidate> candidates;  // normalized, in (i, j) order
  std::size_t attempted = 0;
  std::size_t skipped = 0;     // r == 0
  std::size_t lp_failures = 0;  // solver returned a non-optimal status
  std::size_t produced = 0;     // optimal solves, before deduplication
  long lp_pivots = 0;
};

std::size_t count_l0(std::span<const double> s, double zero_tol);

/// Scales s (and w) so the entry of largest magnitude, lowest index on ties,
/// becomes +1. Throws ZeroCandidate when s == 0.
Candidate normalize_candidate(Candidate c);

/// Random perfect matching of the columns (the odd one out is dropped), one
/// LP per group.
CandidateSet er_spud_dc(const Matrix& y, std::uint64_t pairing_seed, const SpudOptions& opts = {});

/// One LP per column pair i < j, solved in parallel over i and merged in
/// lexicographic order.
CandidateSet er_spud_all_pairs(const Matrix& y, const SpudOptions& opts = {});

namespace serial {
CandidateSet er_spud_all_pairs(const Matrix& y, const SpudOptions& opts = {});
}

enum class RecoveryStatus { Complete, RankDeficient };
std::string_view to_string(RecoveryStatus s);

struct RecoveryResult {
  Matrix x_hat;                       // accepted rows
  Matrix a_hat;                       // empty unless Complete
  std::vector<std::size_t> selected;  // indices into the candidate list
  RecoveryStatus status = RecoveryStatus::RankDeficient;
};

/// Accepts candidates in order of increasing l0 (lowest index on ties) while
/// they keep the accepted rows independent, then A_hat = Y Y^T (X_hat Y^T)^-1.
RecoveryResult greedy_select(std::span<const Candidate> cands, const Matrix& y, std::size_t n,
                             const SpudOptions& opts = {});

/// Line format: "i j l0 objective s_0 ... s_{p-1}".
void write_candidates(std::ostream& os, std::span<const Candidate> cands);
std::vector<Candidate> read_candidates(std::istream& is, double zero_tol = 1e-8);

}  // namespace spud
