#include "spud/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

namespace spud {

std::string_view to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Degenerate: return "degenerate";
  }
  return "unknown";
}

void validate(const L1Problem& prob) {
  if (prob.r.size() != prob.y.rows()) {
    throw DimensionError("l1 problem: r has dimension " + std::to_string(prob.r.size()) +
                         ", Y has " + std::to_string(prob.y.rows()) + " rows");
  }
  if (prob.y.rows() == 0 || prob.y.cols() == 0) throw DimensionError("l1 problem: empty Y");
  for (double v : prob.r)
    if (!std::isfinite(v)) throw std::invalid_argument("l1 problem: r is not finite");
}

StandardLp to_standard_form(const L1Problem& prob) {
  validate(prob);
  const std::size_t n = prob.y.rows();
  const std::size_t p = prob.y.cols();
  // Columns: w+ [0,n), w- [n,2n), t [2n,2n+p), slack+ [.., +p), slack- [.., +p).
  const std::size_t cols = 2 * n + 3 * p;
  const std::size_t rows = 2 * p + 1;
  StandardLp lp;
  lp.a_eq = Matrix(rows, cols);
  lp.b_eq.assign(rows, 0.0);
  lp.c.assign(cols, 0.0);
  lp.weight_dim = n;
  lp.sample_count = p;

  const std::size_t t0 = 2 * n, sp0 = 2 * n + p, sm0 = 2 * n + 2 * p;
  for (std::size_t k = 0; k < p; ++k) {
    lp.c[t0 + k] = 1.0;
    // t_k - y_k^T w - slack+_k = 0   (t_k >= y_k^T w)
    // t_k + y_k^T w - slack-_k = 0   (t_k >= -y_k^T w)
    const std::size_t up = 2 * k, lo = 2 * k + 1;
    for (std::size_t i = 0; i < n; ++i) {
      const double yik = prob.y(i, k);
      lp.a_eq(up, i) = -yik;
      lp.a_eq(up, n + i) = yik;
      lp.a_eq(lo, i) = yik;
      lp.a_eq(lo, n + i) = -yik;
    }
    lp.a_eq(up, t0 + k) = 1.0;
    lp.a_eq(lo, t0 + k) = 1.0;
    lp.a_eq(up, sp0 + k) = -1.0;
    lp.a_eq(lo, sm0 + k) = -1.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    lp.a_eq(rows - 1, i) = prob.r[i];
    lp.a_eq(rows - 1, n + i) = -prob.r[i];
  }
  lp.b_eq[rows - 1] = 1.0;
  return lp;
}

namespace {

/// Tableau with the objective kept as the last row; column `width-1` is the
/// right-hand side.
class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols) : t_(rows + 1, cols + 1), basis_(rows) {}

  double& at(std::size_t i, std::size_t j) { return t_(i, j); }
  double rhs(std::size_t i) const { return t_(i, t_.cols() - 1); }
  double& rhs(std::size_t i) { return t_(i, t_.cols() - 1); }
  std::size_t rows() const { return t_.rows() - 1; }
  std::size_t cols() const { return t_.cols() - 1; }
  std::size_t obj_row() const { return t_.rows() - 1; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t pr, std::size_t pc) {
    const std::size_t w = t_.cols();
    const double inv = 1.0 / t_(pr, pc);
    auto prow = t_.row(pr);
    for (std::size_t j = 0; j < w; ++j) prow[j] *= inv;
    prow[pc] = 1.0;
    for (std::size_t i = 0; i < t_.rows(); ++i) {
      if (i == pr) continue;
      const double f = t_(i, pc);
      if (f == 0.0) continue;
      auto row = t_.row(i);
      for (std::size_t j = 0; j < w; ++j) row[j] -= f * prow[j];
      row[pc] = 0.0;
    }
    basis_[pr] = pc;
  }

  void drop_row(std::size_t r) {
    Matrix next(t_.rows() - 1, t_.cols());
    for (std::size_t i = 0, k = 0; i < t_.rows(); ++i) {
      if (i == r) continue;
      std::copy(t_.row(i).begin(), t_.row(i).end(), next.row(k++).begin());
    }
    t_ = std::move(next);
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
  }

  /// Bland's rule: lowest-index improving column, lowest-index basic variable
  /// among ratio ties.
  enum class Step { Pivoted, Optimal, Unbounded };
  Step bland_step(std::size_t active_cols, double rc_tol, double piv_tol) {
    const std::size_t orow = obj_row();
    std::size_t enter = active_cols;
    for (std::size_t j = 0; j < active_cols; ++j) {
      if (t_(orow, j) < -rc_tol) {
        enter = j;
        break;
      }
    }
    if (enter == active_cols) return Step::Optimal;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows(); ++i) {
      const double a = t_(i, enter);
      if (a > piv_tol) best = std::min(best, std::max(0.0, rhs(i)) / a);
    }
    if (!std::isfinite(best)) return Step::Unbounded;
    const double tie = best + 1e-12 * (1.0 + best);
    std::size_t leave = rows();
    for (std::size_t i = 0; i < rows(); ++i) {
      const double a = t_(i, enter);
      if (a <= piv_tol || std::max(0.0, rhs(i)) / a > tie) continue;
      if (leave == rows() || basis_[i] < basis_[leave]) leave = i;
    }
    pivot(leave, enter);
    return Step::Pivoted;
  }

 private:
  Matrix t_;
  std::vector<std::size_t> basis_;
};

}  // namespace

StandardLpResult simplex(const StandardLp& lp, const SolverOptions& opts) {
  const std::size_t m = lp.a_eq.rows();
  const std::size_t nv = lp.a_eq.cols();
  if (lp.b_eq.size() != m || lp.c.size() != nv) throw DimensionError("simplex: inconsistent LP dimensions");

  long max_pivots = opts.max_pivots;
  if (max_pivots <= 0) {
    max_pivots = lp.weight_dim ? 200L * static_cast<long>(lp.weight_dim + 2 * lp.sample_count)
                               : 200L * static_cast<long>(m + nv);
  }
  const double piv_tol = 1e-11 * std::max(1.0, max_abs(lp.a_eq));

  // Phase 1: artificial column per row, rows sign-normalized so b >= 0.
  Tableau tab(m, nv + m);
  for (std::size_t i = 0; i < m; ++i) {
    const double sgn = lp.b_eq[i] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < nv; ++j) tab.at(i, j) = sgn * lp.a_eq(i, j);
    tab.at(i, nv + i) = 1.0;
    tab.rhs(i) = sgn * lp.b_eq[i];
    tab.basis()[i] = nv + i;
  }
  const std::size_t orow = tab.obj_row();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < nv; ++j) tab.at(orow, j) -= tab.at(i, j);
    tab.rhs(orow) -= tab.rhs(i);
  }

  StandardLpResult out;
  while (true) {
    if (out.pivots >= max_pivots) return out;  // Degenerate
    const auto step = tab.bland_step(nv + m, opts.reduced_cost_tol, piv_tol);
    if (step == Tableau::Step::Optimal) break;
    if (step == Tableau::Step::Unbounded) return out;  // cannot happen in phase 1
    ++out.pivots;
  }
  if (-tab.rhs(orow) > opts.feas_tol) {
    out.status = LpStatus::Infeasible;
    return out;
  }

  // Drive artificials out of the basis; rows where that is impossible are
  // linearly dependent on the others.
  for (std::size_t i = tab.rows(); i-- > 0;) {
    if (tab.basis()[i] < nv) continue;
    std::size_t col = nv;
    for (std::size_t j = 0; j < nv; ++j) {
      if (std::abs(tab.at(i, j)) > piv_tol) {
        col = j;
        break;
      }
    }
    if (col == nv) {
      tab.drop_row(i);
    } else {
      tab.pivot(i, col);
      ++out.pivots;
    }
  }

  // Phase 2 objective row: c - c_B^T B^-1 A over the structural columns.
  const std::size_t orow2 = tab.obj_row();
  for (std::size_t j = 0; j <= nv + m; ++j) tab.at(orow2, j) = 0.0;
  for (std::size_t j = 0; j < nv; ++j) tab.at(orow2, j) = lp.c[j];
  for (std::size_t i = 0; i < tab.rows(); ++i) {
    const double cb = lp.c[tab.basis()[i]];
    if (cb == 0.0) continue;
    for (std::size_t j = 0; j < nv; ++j) tab.at(orow2, j) -= cb * tab.at(i, j);
    tab.rhs(orow2) -= cb * tab.rhs(i);
  }
  while (true) {
    if (out.pivots >= max_pivots) return out;
    const auto step = tab.bland_step(nv, opts.reduced_cost_tol, piv_tol);
    if (step == Tableau::Step::Optimal) break;
    if (step == Tableau::Step::Unbounded) return out;
    ++out.pivots;
  }

  out.x.assign(nv, 0.0);
  for (std::size_t i = 0; i < tab.rows(); ++i) out.x[tab.basis()[i]] = std::max(0.0, tab.rhs(i));
  out.objective = 0.0;
  for (std::size_t j = 0; j < nv; ++j) out.objective += lp.c[j] * out.x[j];
  out.status = LpStatus::Optimal;
  return out;
}

namespace {

LpSolution solve_via_standard_form(const L1Problem& prob, const SolverOptions& opts) {
  const StandardLp lp = to_standard_form(prob);
  const StandardLpResult res = simplex(lp, opts);
  LpSolution sol;
  sol.status = res.status;
  sol.pivots = res.pivots;
  if (res.status != LpStatus::Optimal) return sol;
  const std::size_t n = lp.weight_dim;
  sol.w.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) sol.w[i] = res.x[i] - res.x[n + i];
  // Report the objective of w itself rather than the epigraph variables.
  sol.objective = 0.0;
  for (std::size_t k = 0; k < prob.y.cols(); ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += sol.w[i] * prob.y(i, k);
    sol.objective += std::abs(s);
  }
  return sol;
}

}  // namespace

LpSolution solve_l1(const L1Problem& prob, const SolverOptions& opts) {
  validate(prob);
  if (max_abs(prob.r) == 0.0) throw ZeroConstraint("constraint vector r is zero");
  if (opts.method == LpMethod::StandardForm) return solve_via_standard_form(prob, opts);
  return L1Solver(prob.y, opts).solve(prob.r);
}

namespace {

Matrix compress_columns(const Matrix& y) {
  const std::size_t n = y.rows();
  std::vector<std::vector<long long>> keys;
  std::map<std::vector<long long>, std::size_t> group_of;
  std::vector<Vector> dirs;
  Vector weights;
  for (std::size_t j = 0; j < y.cols(); ++j) {
    Vector v = y.col(j);
    std::size_t imax = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
    const double lead = v[imax];
    if (lead == 0.0) continue;
    std::vector<long long> key(n);
    for (std::size_t i = 0; i < n; ++i) key[i] = std::llround(v[i] / lead * 1e12);
    auto [it, inserted] = group_of.try_emplace(std::move(key), dirs.size());
    if (inserted) {
      for (double& x : v) x /= lead;
      dirs.push_back(std::move(v));
      weights.push_back(std::abs(lead));
    } else {
      weights[it->second] += std::abs(lead);
    }
  }
  if (dirs.empty()) return Matrix(n, 0);
  Matrix yc(n, dirs.size());
  for (std::size_t g = 0; g < dirs.size(); ++g)
    for (std::size_t i = 0; i < n; ++i) yc(i, g) = weights[g] * dirs[g][i];
  return yc;
}

}  // namespace

L1Solver::L1Solver(const Matrix& y, SolverOptions opts) : y_(y), opts_(opts) {
  if (y.rows() == 0 || y.cols() == 0) throw DimensionError("L1Solver: empty Y");
  if (opts_.method == LpMethod::DualSimplex)
    ctx_ = std::make_shared<detail::DualContext>(detail::make_dual_context(compress_columns(y)));
}

LpSolution L1Solver::solve(std::span<const double> r) const {
  if (r.size() != y_.rows()) throw DimensionError("L1Solver: r has wrong dimension");
  if (max_abs(r) == 0.0) throw ZeroConstraint("constraint vector r is zero");
  if (opts_.method == LpMethod::StandardForm) return solve_via_standard_form({y_, r}, opts_);
  return detail::dual_simplex_l1(*ctx_, r, opts_);
}

std::size_t L1Solver::compressed_cols() const { return ctx_ ? ctx_->y.cols() : y_.cols(); }

}  // namespace spud
