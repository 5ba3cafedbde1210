#include "spud/spud.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "spud/rng.hpp"

namespace spud {

namespace {

struct Pair {
  std::size_t i, j, group;
  bool repeat = false;  // r is parallel to the r of an earlier pair
};

// Key of a normalized candidate: entries below the l0 threshold are zero,
// the rest are rounded to 12 decimal digits.
long long quantize(double v, double cut) { return std::abs(v) > cut ? std::llround(v * 1e12) : 0; }

class Deduper {
 public:
  explicit Deduper(double zero_tol) : zero_tol_(zero_tol) {}

  // Returns true when `c` is new; `pool` holds the candidates seen so far.
  bool insert(const Candidate& c, const std::vector<Candidate>& pool, std::size_t index) {
    const std::uint64_t h = hash(c.s);
    auto& bucket = buckets_[h];
    for (std::size_t k : bucket)
      if (same(pool[k].s, c.s)) return false;
    bucket.push_back(index);
    return true;
  }

 private:
  std::uint64_t hash(const Vector& s) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (double v : s) h = mix64(h ^ static_cast<std::uint64_t>(quantize(v, zero_tol_)));
    return h;
  }
  bool same(const Vector& a, const Vector& b) const {
    for (std::size_t k = 0; k < a.size(); ++k)
      if (quantize(a[k], zero_tol_) != quantize(b[k], zero_tol_)) return false;
    return true;
  }

  double zero_tol_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> buckets_;
};

struct Batch {
  std::vector<Candidate> cands;
  std::size_t attempted = 0, skipped = 0, failures = 0, produced = 0;
  long pivots = 0;
};

void solve_pair(const L1Solver& solver, const Matrix& yt, const Pair& pr, const SpudOptions& opts,
                Batch& out) {
  const std::size_t n = yt.cols();
  ++out.attempted;
  Vector r(n);
  auto yi = yt.row(pr.i), yj = yt.row(pr.j);
  for (std::size_t k = 0; k < n; ++k) r[k] = yi[k] + yj[k];
  if (max_abs(r) == 0.0) {
    ++out.skipped;
    return;
  }
  if (pr.repeat) {
    // Same LP up to scaling as an earlier pair; its candidate would be
    // removed as a duplicate.
    ++out.produced;
    return;
  }
  LpSolution sol = solver.solve(r);
  out.pivots += sol.pivots;
  if (sol.status != LpStatus::Optimal) {
    ++out.failures;
    return;
  }
  const Matrix& y = solver.y();
  Candidate c;
  c.i = pr.i;
  c.j = pr.j;
  c.group = pr.group;
  c.objective = sol.objective;
  c.s.assign(y.cols(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double wk = sol.w[k];
    auto row = y.row(k);
    for (std::size_t col = 0; col < y.cols(); ++col) c.s[col] += wk * row[col];
  }
  c.w = std::move(sol.w);
  try {
    c = normalize_candidate(std::move(c));
  } catch (const ZeroCandidate&) {
    ++out.failures;  // r outside the row space leaves s = 0
    return;
  }
  c.l0 = count_l0(c.s, opts.zero_tol);
  ++out.produced;
  out.cands.push_back(std::move(c));
}

// Folds `batch` into `set`, deduplicating against everything merged before.
void merge(CandidateSet& set, Deduper& dedup, Batch&& batch, bool use_dedup) {
  set.attempted += batch.attempted;
  set.skipped += batch.skipped;
  set.lp_failures += batch.failures;
  set.produced += batch.produced;
  set.lp_pivots += batch.pivots;
  for (auto& c : batch.cands) {
    if (use_dedup && !dedup.insert(c, set.candidates, set.candidates.size())) continue;
    set.candidates.push_back(std::move(c));
  }
}

// Solves the pair groups (each a run of pairs sharing a task) and merges the
// results strictly in group order, whatever order the tasks finish in.
CandidateSet run_groups(const Matrix& y, const std::vector<std::vector<Pair>>& groups,
                        const SpudOptions& opts, bool parallel) {
  CandidateSet set;
  if (y.cols() < 2) throw DimensionError("at least two columns are required");
  const L1Solver solver(y, opts.solver);
  const Matrix yt = transpose(y);
  Deduper dedup(opts.zero_tol);

  std::vector<Batch> pending(groups.size());
  std::vector<char> ready(groups.size(), 0);
  std::size_t next = 0;
  std::mutex mu;
  const auto count = static_cast<std::ptrdiff_t>(groups.size());
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (std::ptrdiff_t g = 0; g < count; ++g) {
    Batch local;
    for (const Pair& pr : groups[static_cast<std::size_t>(g)]) solve_pair(solver, yt, pr, opts, local);
    // Local pass first so a task never hands over long runs of repeats.
    Batch kept{{}, local.attempted, local.skipped, local.failures, local.produced, local.pivots};
    Deduper local_dedup(opts.zero_tol);
    for (auto& c : local.cands) {
      if (opts.dedup && !local_dedup.insert(c, kept.cands, kept.cands.size())) continue;
      kept.cands.push_back(std::move(c));
    }
    std::lock_guard lock(mu);
    pending[static_cast<std::size_t>(g)] = std::move(kept);
    ready[static_cast<std::size_t>(g)] = 1;
    while (next < groups.size() && ready[next]) {
      merge(set, dedup, std::move(pending[next]), opts.dedup);
      pending[next] = Batch{};
      ++next;
    }
  }
  return set;
}

// Flags every pair whose constraint direction (up to sign and scale, compared
// at 12 digits) already occurred earlier in lexicographic order.
void mark_repeats(const Matrix& y, std::vector<std::vector<Pair>>& groups) {
  const std::size_t n = y.rows();
  const Matrix yt = transpose(y);
  std::map<std::vector<long long>, char> seen;
  Vector r(n);
  std::vector<long long> key(n);
  for (auto& group : groups) {
    for (Pair& pr : group) {
      auto yi = yt.row(pr.i), yj = yt.row(pr.j);
      std::size_t imax = 0;
      for (std::size_t k = 0; k < n; ++k) {
        r[k] = yi[k] + yj[k];
        if (std::abs(r[k]) > std::abs(r[imax])) imax = k;
      }
      if (r[imax] == 0.0) continue;
      for (std::size_t k = 0; k < n; ++k) key[k] = std::llround(r[k] / r[imax] * 1e12);
      pr.repeat = !seen.try_emplace(key, 0).second;
    }
  }
}

std::vector<std::vector<Pair>> all_pair_groups(std::size_t p) {
  std::vector<std::vector<Pair>> groups;
  if (p < 2) return groups;
  groups.resize(p - 1);
  for (std::size_t i = 0; i + 1 < p; ++i)
    for (std::size_t j = i + 1; j < p; ++j) groups[i].push_back({i, j, kNoGroup, false});
  return groups;
}

}  // namespace

std::size_t count_l0(std::span<const double> s, double zero_tol) {
  const double cut = zero_tol * max_abs(s);
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [cut](double v) { return std::abs(v) > cut; }));
}

Candidate normalize_candidate(Candidate c) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < c.s.size(); ++k)
    if (std::abs(c.s[k]) > std::abs(c.s[best])) best = k;
  if (c.s.empty() || c.s[best] == 0.0) throw ZeroCandidate("candidate s is zero");
  const double scale = c.s[best];
  for (double& v : c.s) v /= scale;
  for (double& v : c.w) v /= scale;
  c.s[best] = 1.0;
  return c;
}

CandidateSet er_spud_dc(const Matrix& y, std::uint64_t pairing_seed, const SpudOptions& opts) {
  const std::size_t p = y.cols();
  if (p < 2) throw DimensionError("at least two columns are required");
  std::vector<std::size_t> perm(p);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(pairing_seed);
  for (std::size_t k = p - 1; k > 0; --k) std::swap(perm[k], perm[rng.below(k + 1)]);
  std::vector<std::vector<Pair>> groups(p / 2);
  for (std::size_t g = 0; g < p / 2; ++g) {
    const std::size_t a = perm[2 * g], b = perm[2 * g + 1];
    groups[g].push_back({std::min(a, b), std::max(a, b), g, false});
  }
  return run_groups(y, groups, opts, true);
}

CandidateSet er_spud_all_pairs(const Matrix& y, const SpudOptions& opts) {
  auto groups = all_pair_groups(y.cols());
  if (opts.dedup) mark_repeats(y, groups);
  return run_groups(y, groups, opts, true);
}

namespace serial {
CandidateSet er_spud_all_pairs(const Matrix& y, const SpudOptions& opts) {
  auto groups = all_pair_groups(y.cols());
  if (opts.dedup) mark_repeats(y, groups);
  return run_groups(y, groups, opts, false);
}
}  // namespace serial

std::string_view to_string(RecoveryStatus s) {
  return s == RecoveryStatus::Complete ? "complete" : "rank_deficient";
}

RecoveryResult greedy_select(std::span<const Candidate> cands, const Matrix& y, std::size_t n,
                             const SpudOptions& opts) {
  if (n == 0 || y.rows() != n) throw DimensionError("greedy_select: n must equal the rows of Y");
  const std::size_t p = y.cols();
  std::vector<std::size_t> order(cands.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return cands[a].l0 < cands[b].l0; });

  RecoveryResult res;
  std::vector<double> rows;
  for (std::size_t idx : order) {
    if (res.selected.size() == n) break;
    const auto& s = cands[idx].s;
    if (s.size() != p) throw DimensionError("greedy_select: candidate length differs from p");
    std::vector<double> trial = rows;
    trial.insert(trial.end(), s.begin(), s.end());
    const std::size_t k = res.selected.size() + 1;
    if (rank(Matrix(k, p, trial), opts.rank_tol) == k) {
      rows = std::move(trial);
      res.selected.push_back(idx);
    }
  }
  res.x_hat = Matrix(res.selected.size(), p, rows);
  if (res.selected.size() < n) return res;

  // A_hat = Y Y^T (X_hat Y^T)^-1, via (X_hat Y^T)^T A_hat^T = (Y Y^T)^T.
  const Matrix gram = matmul_transposed(y, y);
  const Matrix h = matmul_transposed(res.x_hat, y);
  try {
    res.a_hat = transpose(lu_solve(transpose(h), gram));
    res.status = RecoveryStatus::Complete;
  } catch (const SingularMatrix&) {
    res.a_hat = Matrix();
  }
  return res;
}

void write_candidates(std::ostream& os, std::span<const Candidate> cands) {
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& c : cands) {
    line.str({});
    line << c.i << ' ' << c.j << ' ' << c.l0 << ' ' << c.objective;
    for (double v : c.s) line << ' ' << v;
    os << line.str() << '\n';
  }
}

std::vector<Candidate> read_candidates(std::istream& is, double zero_tol) {
  std::vector<Candidate> out;
  std::string text;
  std::size_t lineno = 0;
  while (std::getline(is, text)) {
    ++lineno;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream line(text);
    Candidate c;
    if (!(line >> c.i >> c.j >> c.l0 >> c.objective)) {
      throw IoError("candidate line " + std::to_string(lineno) + ": bad header fields");
    }
    std::string tok;
    while (line >> tok) {
      try {
        c.s.push_back(std::stod(tok));
      } catch (const std::logic_error&) {
        throw IoError("candidate line " + std::to_string(lineno) + ": bad value '" + tok + "'");
      }
    }
    if (!out.empty() && c.s.size() != out.front().s.size()) {
      throw IoError("candidate line " + std::to_string(lineno) + ": length differs");
    }
    if (c.l0 != count_l0(c.s, zero_tol)) {
      throw IoError("candidate line " + std::to_string(lineno) + ": l0 does not match s");
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace spud
