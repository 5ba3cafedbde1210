#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "spud/lp_solver.hpp"
#include "spud/model.hpp"
#include "spud/spud.hpp"

namespace spud {

/// An input violates the hypothesis of the claim being checked.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

constexpr std::size_t kNoRow = std::numeric_limits<std::size_t>::max();

struct RowMatch {
  std::size_t candidate = 0;
  std::size_t row = kNoRow;  // best row of X, kNoRow if none is within tolerance
  double scale = 0.0;        // s ~ scale * x_row
  double mismatch = std::numeric_limits<double>::infinity();  // ||s - scale x|| / ||s||
};

struct MatchReport {
  std::vector<RowMatch> matches;  // one per candidate
  std::vector<char> recovered;    // per row of X
  std::vector<char> unmatchable;  // per row of X: the row is identically zero
  std::size_t rows_recovered = 0;
};

/// Matches every candidate against the best-fitting row of X after optimal
/// scaling. A row is recovered when some candidate is within match_tol.
MatchReport match_rows(std::span<const Candidate> cands, const Matrix& x, double match_tol = 1e-6);

struct SparsityReport {
  std::vector<std::size_t> row_l0;
  std::size_t max_row_l0 = 0;
  std::size_t zero_rows = 0;
  std::size_t combos = 0;  // combinations actually sampled (0 when n < 2)
  std::size_t min_combo_l0 = std::numeric_limits<std::size_t>::max();
  double upper = 0.0;  // (10/9) theta p
  double lower = 0.0;  // (11/9) theta p

  bool rows_ok() const { return zero_rows == 0 && static_cast<double>(max_row_l0) <= upper; }
  bool combos_ok() const { return combos == 0 || static_cast<double>(min_combo_l0) >= lower; }
  bool holds() const { return rows_ok() && combos_ok(); }
};

/// Row l0 counts of X and the smallest l0 among `combos` random combinations
/// of k rows (k uniform in [2, n], Gaussian coefficients, relative zero
/// threshold 1e-12).
SparsityReport sparsity_separation(const CoefficientMatrix& x, std::size_t combos,
                                   std::uint64_t seed);

struct MarginalReport {
  double lhs = 0.0;  // Monte-Carlo mean of |v^T Z|
  double rhs = 0.0;  // (mu / 8) sqrt(theta / n) ||v||_1
  double std_err = 0.0;
  bool pass = false;  // lhs >= rhs - 3 std_err
};

MarginalReport check_marginal_lower_bound(const DistributionSpec& dist, double theta, std::size_t n,
                                          std::span<const double> v, std::size_t mc_samples,
                                          std::uint64_t seed);

struct PartitionReport {
  std::size_t checked = 0;
  std::size_t passed = 0;
  /// Smallest (||v^T X||_1 - 2 ||v^T X_S||_1 - c ||v||_1) / ||v||_1 over the
  /// directions, with c = (p mu / 32) sqrt(theta / n).
  double worst_margin = std::numeric_limits<double>::infinity();
  bool all_pass() const { return passed == checked; }
};

/// Evaluates the inequality at `v_samples` Gaussian directions plus every
/// +-e_j. Requires 4 |S| < p.
PartitionReport check_partition_inequality(const CoefficientMatrix& x,
                                           std::span<const std::size_t> subset,
                                           std::size_t v_samples, std::uint64_t seed);

/// `size` distinct column indices below p, in increasing order.
std::vector<std::size_t> random_subset(std::size_t p, std::size_t size, std::uint64_t seed);

struct RestrictedReport {
  bool pass = false;
  std::vector<std::size_t> support;  // entries of z above 1e-8 max|z|
  std::size_t argmax = 0;            // index of the largest |b_k|
  Vector z;
  LpStatus status = LpStatus::Degenerate;
};

/// Solves min ||z^T XJ||_1 s.t. b^T z = 1 and passes iff z is 1-sparse at the
/// largest entry of b. The second largest |b_k| must not exceed (1 - gamma)
/// times the largest (PreconditionError otherwise); b == 0 raises
/// ZeroConstraint.
RestrictedReport check_restricted_one_sparse(const Matrix& xj, std::span<const double> b,
                                             double gamma, const SolverOptions& opts = {});

struct RestrictedInstance {
  Matrix xj;
  Vector b;
};

/// s x p coefficient block from the model and a b whose largest entry has
/// magnitude 1 at a random index, the rest uniform in [-(1-gamma), 1-gamma].
RestrictedInstance sample_restricted_instance(std::size_t s, std::size_t p, double theta,
                                              const DistributionSpec& dist, double gamma,
                                              std::uint64_t seed);

enum class WMethod { VertexMax, VertexPlusRandomSearch };
std::string_view to_string(WMethod m);
WMethod parse_w_method(std::string_view text);

struct WOptions {
  WMethod method = WMethod::VertexMax;
  std::size_t trials = 1;
  std::size_t search_steps = 50;
  /// Draws used to estimate E|x^T Z| at non-vertex points (>= 1e5).
  std::size_t mc_samples = 100000;
};

struct WEstimate {
  std::size_t p = 0;
  double theta = 0.0;
  std::size_t trials = 0;
  WMethod method = WMethod::VertexMax;
  std::vector<double> values;  // one lower bound on W per trial

  double median() const;
};

/// max_j |(1/p) sum_i |z_ji| - expected_abs|, the value of the empirical
/// process at the vertices of the l1 ball.
double vertex_max(const Matrix& z, double expected_abs);

/// Per trial draws Z_1..Z_p from the model (substream `trial` of the seed).
/// The search method also hill-climbs on the l1 sphere, estimating E|x^T Z|
/// from an independent sample, so its increment over the vertex value is a
/// Monte-Carlo estimate rather than a certified bound.
WEstimate estimate_W(const ModelParams& params, const WOptions& opts);

}  // namespace spud
