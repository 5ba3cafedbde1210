#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "spud/numerics.hpp"

namespace spud {

/// Raised when the constraint vector of an l1 problem is identically zero.
class ZeroConstraint : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class LpStatus { Optimal, Infeasible, Degenerate };
std::string_view to_string(LpStatus s);

enum class LpMethod {
  /// Bounded dual simplex with an n x n basis (the production kernel).
  DualSimplex,
  /// Epigraph reformulation solved by the dense two-phase tableau simplex.
  StandardForm,
};

struct SolverOptions {
  double feas_tol = 1e-8;
  double opt_tol = 1e-8;
  /// Reduced costs above -reduced_cost_tol count as nonnegative.
  double reduced_cost_tol = 1e-9;
  /// 0 selects 200 * (n + 2p).
  long max_pivots = 0;
  LpMethod method = LpMethod::DualSimplex;
  /// Dual kernel only: long-step ratio test (bound flipping) until a run of
  /// degenerate pivots forces the pure Bland rule.
  bool long_step = true;
  /// Dual kernel only: relative size of the hyperplane shifts used to break
  /// degeneracy before the final unshifted re-optimization; 0 disables.
  double perturbation = 1e-7;
};

/// minimize ||w^T y||_1 subject to r^T w = 1. Non-owning.
struct L1Problem {
  const Matrix& y;
  std::span<const double> r;
};

/// minimize c^T x subject to a_eq x = b_eq, x >= 0.
struct StandardLp {
  Matrix a_eq;
  Vector b_eq;
  Vector c;
  /// Layout of the l1 reformulation: x = (w+, w-, t, slack+, slack-).
  std::size_t weight_dim = 0;
  std::size_t sample_count = 0;
};

struct StandardLpResult {
  Vector x;
  double objective = 0.0;
  LpStatus status = LpStatus::Degenerate;
  long pivots = 0;
};

struct LpSolution {
  Vector w;
  double objective = 0.0;
  LpStatus status = LpStatus::Degenerate;
  long pivots = 0;
};

void validate(const L1Problem& prob);

StandardLp to_standard_form(const L1Problem& prob);

/// Dense two-phase tableau simplex with Bland's rule throughout. Redundant
/// equality rows are dropped after phase 1.
StandardLpResult simplex(const StandardLp& lp, const SolverOptions& opts);

/// Solves the l1 problem with the method selected in `opts`. Throws
/// ZeroConstraint when r == 0.
LpSolution solve_l1(const L1Problem& prob, const SolverOptions& opts = {});

namespace detail {

/// Per-Y data shared by every solve of the dual kernel.
struct DualContext {
  Matrix y;   // n x p
  Matrix yt;  // p x n
  Vector shift_base;
  double ymax = 0.0;
  /// Columns forming a basis of span(Y), and its orthonormalization.
  std::vector<std::size_t> span_cols;
  std::vector<Vector> span_q;
};

/// `y` must have no zero column.
DualContext make_dual_context(Matrix y);
LpSolution dual_simplex_l1(const DualContext& ctx, std::span<const double> r,
                           const SolverOptions& opts);

}  // namespace detail

/// Reusable solver for many constraint vectors against one fixed Y. `solve`
/// is const and safe to call from several threads at once.
///
/// Zero columns of Y are dropped and parallel columns merged (|c v^T w| summed
/// over a group equals |(sum |c|) v^T w|), which leaves the optimal value and
/// the optimal set unchanged.
class L1Solver {
 public:
  explicit L1Solver(const Matrix& y, SolverOptions opts = {});

  LpSolution solve(std::span<const double> r) const;

  const Matrix& y() const { return y_; }
  const SolverOptions& options() const { return opts_; }
  /// Column count after compression.
  std::size_t compressed_cols() const;

 private:
  const Matrix& y_;
  std::shared_ptr<const detail::DualContext> ctx_;
  SolverOptions opts_;
};

}  // namespace spud
