// Bounded dual simplex for  min ||w^T Y||_1  s.t.  r^T w = 1.
//
// The LP dual is  max lambda  s.t.  Y u + lambda r = 0,  -1 <= u_j <= 1,
// whose basis is only n x n. A basis is a set of n rows of
//
//   M = [ r^T ; y_j^T (j basic) ; e_i^T (padding when rank Y < n) ]
//
// and the primal iterate is the vertex w = M^-1 e_0, i.e. r^T w = 1 and
// y_j^T w = 0 for every basic column. Nonbasic dual variables sit at
// u_j = sign(y_j^T w); the basic ones solve M^T c = -g with
// g = sum_{j nonbasic} sign_j y_j. The vertex is optimal iff |c_j| <= 1 for
// every basic column. Otherwise a violating column leaves and the primal
// moves along the released edge until the l1 slope turns nonnegative
// (long step) or to the first breakpoint (Bland).
//
// Sparse codes make the optimum massively degenerate (most y_j^T w are
// exactly zero), so the kernel first solves a copy with every hyperplane
// shifted by a tiny deterministic amount, y_j^T w + shift_j, then drops the
// shifts and re-optimizes from the final basis.

#include <algorithm>
#include <cmath>
#include <vector>

#include "spud/lp_solver.hpp"
#include "spud/rng.hpp"

namespace spud::detail {

namespace {

constexpr double kIndepTol = 1e-9;

// Gram-Schmidt (applied twice) residual of v against the orthonormal set q.
Vector residual(std::span<const double> v, const std::vector<Vector>& q) {
  Vector res(v.begin(), v.end());
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : q) {
      const double proj = dot(res, b);
      for (std::size_t i = 0; i < res.size(); ++i) res[i] -= proj * b[i];
    }
  }
  return res;
}

void push_normalized(std::vector<Vector>& q, Vector v) {
  const double nv = norm2(v);
  for (double& x : v) x /= nv;
  q.push_back(std::move(v));
}

enum class SlotKind { Lambda, Column, Unit };

struct Slot {
  SlotKind kind;
  std::size_t index;  // column of Y, or coordinate for Unit
};

struct Breakpoint {
  double step;
  std::size_t col;
  bool operator<(const Breakpoint& o) const { return step < o.step || (step == o.step && col < o.col); }
};

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

class DualSimplex {
 public:
  DualSimplex(const DualContext& ctx, std::span<const double> r, const SolverOptions& opts)
      : ctx_(ctx), r_(r.begin(), r.end()), opts_(opts), n_(ctx.y.rows()), p_(ctx.y.cols()) {
    max_pivots_ = opts.max_pivots > 0 ? opts.max_pivots : 200L * static_cast<long>(n_ + 2 * p_);
    bland_ = !opts.long_step;
  }

  LpSolution run() {
    if (!build_initial_basis()) return finish(LpStatus::Optimal);  // closed form
    try {
      if (opts_.perturbation > 0.0) {
        const double scale = opts_.perturbation / norm2(r_);
        shift_.resize(p_);
        for (std::size_t j = 0; j < p_; ++j) shift_[j] = scale * ctx_.shift_base[j];
        if (!optimize(false)) return finish(LpStatus::Degenerate);
        shift_.clear();
      }
      if (!optimize(true)) return finish(LpStatus::Degenerate);
      return finish(LpStatus::Optimal);
    } catch (const SingularMatrix&) {
      return finish(LpStatus::Degenerate);
    }
  }

 private:
  std::span<const double> ycol(std::size_t j) const { return ctx_.yt.row(j); }

  // out[j] = y_j^T v for every column, streaming the row-major Y.
  void column_products(const Vector& v, Vector& out) const {
    out.assign(p_, 0.0);
    double* o = out.data();
    for (std::size_t i = 0; i < n_; ++i) {
      const double vi = v[i];
      if (vi == 0.0) continue;
      const double* row = ctx_.y.row(i).data();
      for (std::size_t j = 0; j < p_; ++j) o[j] += vi * row[j];
    }
  }

  // Runs pivots until the current (possibly shifted) problem is optimal.
  // With `verify`, optimality is confirmed on a fresh factorization.
  // Returns false on pivot exhaustion or numerical breakdown.
  bool optimize(bool verify) {
    refactor();
    long since_refactor = 0;
    long degenerate_run = 0;
    while (true) {
      const std::size_t leave = choose_leaving();
      if (leave == kNone) {
        if (!verify || since_refactor == 0) return true;
        refactor();
        since_refactor = 0;
        continue;
      }
      if (pivots_ >= max_pivots_) return false;
      const double step = pivot(leave);
      if (step < 0.0) return false;
      ++pivots_;
      degenerate_run = step <= 1e-14 ? degenerate_run + 1 : 0;
      if (!bland_ && degenerate_run > static_cast<long>(2 * n_ + 10)) bland_ = true;
      if (++since_refactor >= 50) {
        refactor();
        since_refactor = 0;
      }
    }
  }

  // Returns false when the problem was solved in closed form (r outside the
  // column span of Y, so the optimum is 0).
  bool build_initial_basis() {
    Vector r_out = residual(r_, ctx_.span_q);
    if (norm2(r_out) > kIndepTol * norm2(r_)) {
      const double scale = dot(r_, r_out);
      w_ = r_out;
      for (double& x : w_) x /= scale;
      return false;
    }

    std::vector<Vector> q;
    slots_.clear();
    push_normalized(q, Vector(r_.begin(), r_.end()));
    slots_.push_back({SlotKind::Lambda, 0});
    sign_.assign(p_, 1.0);
    const std::size_t rank = ctx_.span_cols.size();
    for (std::size_t j : ctx_.span_cols) {
      if (q.size() == rank) break;  // r already fills one direction of span(Y)
      Vector res = residual(ycol(j), q);
      if (norm2(res) > kIndepTol * norm2(ycol(j))) {
        push_normalized(q, std::move(res));
        slots_.push_back({SlotKind::Column, j});
        sign_[j] = 0.0;
      }
    }
    while (q.size() < n_) {
      std::size_t best = 0;
      double best_norm = -1.0;
      Vector best_res;
      for (std::size_t i = 0; i < n_; ++i) {
        Vector e(n_, 0.0);
        e[i] = 1.0;
        Vector res = residual(e, q);
        const double nr = norm2(res);
        if (nr > best_norm) {
          best_norm = nr;
          best = i;
          best_res = std::move(res);
        }
      }
      push_normalized(q, std::move(best_res));
      slots_.push_back({SlotKind::Unit, best});
    }
    return true;
  }

  // Rebuilds M^-1 from the slot list and recomputes every derived quantity.
  // h_j = y_j^T w + shift_j is the (shifted) residual; zero on basic columns,
  // which are the ones with sign_j == 0.
  void refactor() {
    Matrix m(n_, n_);
    Vector rhs(n_, 0.0);
    for (std::size_t k = 0; k < n_; ++k) {
      const Slot& s = slots_[k];
      switch (s.kind) {
        case SlotKind::Lambda:
          std::copy(r_.begin(), r_.end(), m.row(k).begin());
          rhs[k] = 1.0;
          break;
        case SlotKind::Column: {
          auto v = ycol(s.index);
          std::copy(v.begin(), v.end(), m.row(k).begin());
          rhs[k] = shift_.empty() ? 0.0 : -shift_[s.index];
          break;
        }
        case SlotKind::Unit: m(k, s.index) = 1.0; break;
      }
    }
    minv_ = inverse(m, 0.0);
    w_.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) w_[i] = dot(minv_.row(i), rhs);
    column_products(w_, h_);
    zero_tol_ = 1e-12 * std::max(1.0, ctx_.ymax * norm1(w_));
    const bool shifted = !shift_.empty();
    for (std::size_t j = 0; j < p_; ++j) {
      if (sign_[j] == 0.0) {
        h_[j] = 0.0;
        continue;
      }
      if (shifted) h_[j] += shift_[j];
      if (h_[j] > zero_tol_) sign_[j] = 1.0;
      else if (h_[j] < -zero_tol_) sign_[j] = -1.0;
    }
    g_.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double* row = ctx_.y.row(i).data();
      double acc = 0.0;
      for (std::size_t j = 0; j < p_; ++j) acc += sign_[j] * row[j];
      g_[i] = acc;
    }
    update_multipliers();
  }

  void update_multipliers() {
    c_.assign(n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) {
      const double gi = g_[i];
      if (gi == 0.0) continue;
      auto row = minv_.row(i);
      for (std::size_t k = 0; k < n_; ++k) c_[k] -= row[k] * gi;
    }
  }

  std::size_t choose_leaving() const {
    const double limit = 1.0 + opts_.reduced_cost_tol;
    std::size_t best = kNone;
    for (std::size_t k = 0; k < n_; ++k) {
      if (slots_[k].kind != SlotKind::Column) continue;
      const double mag = std::abs(c_[k]);
      if (mag <= limit) continue;
      if (best == kNone) {
        best = k;
      } else if (bland_) {
        if (slots_[k].index < slots_[best].index) best = k;
      } else if (mag > std::abs(c_[best])) {
        best = k;
      }
    }
    return best;
  }

  void add_column(Vector& acc, std::size_t j, double coef) const {
    auto y = ycol(j);
    for (std::size_t i = 0; i < n_; ++i) acc[i] += coef * y[i];
  }

  // Performs one basis change releasing `slot`; returns the primal step
  // length, or a negative value on numerical breakdown.
  double pivot(std::size_t slot) {
    const double t = c_[slot] > 0.0 ? 1.0 : -1.0;
    dir_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) dir_[i] = t * minv_(i, slot);
    const std::size_t leaving_col = slots_[slot].index;
    const double alpha_tol = 1e-11 * std::max(1e-300, ctx_.ymax * norm1(dir_));

    // alpha_j = y_j^T dir is the rate of change of h_j along the edge. A
    // nonbasic column whose |h_j| shrinks yields a breakpoint.
    column_products(dir_, alpha_);
    bps_.clear();
    for (std::size_t j = 0; j < p_; ++j) {
      const double sa = sign_[j] * alpha_[j];
      if (sa < -alpha_tol) bps_.push_back({std::max(0.0, h_[j] * sign_[j]) / -sa, j});
    }
    if (bps_.empty()) return -1.0;

    std::size_t enter = kNone;
    double step = 0.0;
    flips_.clear();
    if (bland_) {
      double best = bps_.front().step;
      for (const auto& bp : bps_) best = std::min(best, bp.step);
      const double tie = best + 1e-12 * (1.0 + best);
      for (const auto& bp : bps_)
        if (bp.step <= tie && (enter == kNone || bp.col < enter)) enter = bp.col;
      step = best;
    } else {
      // Breakpoints in increasing step order, selected a chunk at a time.
      double slope = 1.0 - std::abs(c_[slot]);
      auto first = bps_.begin();
      while (first != bps_.end() && enter == kNone) {
        const auto chunk = std::min<std::ptrdiff_t>(32, bps_.end() - first);
        std::nth_element(first, first + chunk - 1, bps_.end());
        std::sort(first, first + chunk);
        for (auto it = first; it != first + chunk; ++it) {
          slope += 2.0 * std::abs(alpha_[it->col]);
          if (slope >= 0.0) {
            enter = it->col;
            step = it->step;
            break;
          }
          flips_.push_back(it->col);
        }
        first += chunk;
      }
      if (enter == kNone) return -1.0;
    }

    if (step != 0.0) {
      for (std::size_t i = 0; i < n_; ++i) w_[i] += step * dir_[i];
      for (std::size_t j = 0; j < p_; ++j) h_[j] += step * alpha_[j];
    }

    for (std::size_t j : flips_) {
      sign_[j] = -sign_[j];
      add_column(g_, j, 2.0 * sign_[j]);
    }
    sign_[leaving_col] = t;
    h_[leaving_col] = step * t;
    add_column(g_, leaving_col, t);

    add_column(g_, enter, -sign_[enter]);
    sign_[enter] = 0.0;
    h_[enter] = 0.0;

    // Replace row `slot` of M by y_enter^T: column update of M^-1.
    v_.assign(n_, 0.0);
    auto ye = ycol(enter);
    for (std::size_t i = 0; i < n_; ++i) {
      if (ye[i] == 0.0) continue;
      auto row = minv_.row(i);
      for (std::size_t k = 0; k < n_; ++k) v_[k] += ye[i] * row[k];
    }
    const double piv = v_[slot];
    for (std::size_t i = 0; i < n_; ++i) {
      auto row = minv_.row(i);
      const double dd = row[slot] / piv;
      for (std::size_t k = 0; k < n_; ++k)
        if (k != slot) row[k] -= dd * v_[k];
      row[slot] = dd;
    }
    slots_[slot] = {SlotKind::Column, enter};
    update_multipliers();
    return step;
  }

  LpSolution finish(LpStatus status) {
    LpSolution sol;
    sol.status = status;
    sol.pivots = pivots_;
    sol.w = w_;
    Vector s;
    column_products(w_, s);
    sol.objective = norm1(s);
    return sol;
  }

  const DualContext& ctx_;
  Vector r_;
  SolverOptions opts_;
  std::size_t n_, p_;
  double zero_tol_ = 0.0;
  long max_pivots_ = 0;
  long pivots_ = 0;
  bool bland_ = false;

  std::vector<Slot> slots_;
  Matrix minv_;
  Vector w_, h_, shift_, sign_, g_, c_, alpha_, dir_, v_;
  std::vector<Breakpoint> bps_;
  std::vector<std::size_t> flips_;
};

}  // namespace

DualContext make_dual_context(Matrix y) {
  DualContext ctx;
  ctx.yt = transpose(y);
  ctx.ymax = max_abs(y);
  const std::size_t n = y.rows();
  ctx.shift_base.resize(y.cols());
  for (std::size_t j = 0; j < y.cols(); ++j) {
    auto col = ctx.yt.row(j);
    const double nj = norm2(col);
    // Shifts are relative to a typical |y_j^T w|, which scales like |y_j| / |r|.
    const double u = static_cast<double>(mix64(j) >> 11) * 0x1.0p-53;
    ctx.shift_base[j] = nj * (1.0 + u);
    if (ctx.span_q.size() < n && nj > 0.0) {
      Vector res = residual(col, ctx.span_q);
      if (norm2(res) > kIndepTol * nj) {
        push_normalized(ctx.span_q, std::move(res));
        ctx.span_cols.push_back(j);
      }
    }
  }
  ctx.y = std::move(y);
  return ctx;
}

LpSolution dual_simplex_l1(const DualContext& ctx, std::span<const double> r,
                           const SolverOptions& opts) {
  if (r.size() != ctx.y.rows()) throw DimensionError("dual simplex: r has wrong dimension");
  if (max_abs(r) == 0.0) throw ZeroConstraint("constraint vector r is zero");
  return DualSimplex(ctx, r, opts).run();
}

}  // namespace spud::detail
