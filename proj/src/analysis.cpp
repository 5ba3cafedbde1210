#include "spud/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spud/rng.hpp"

namespace spud {

MatchReport match_rows(std::span<const Candidate> cands, const Matrix& x, double match_tol) {
  const std::size_t n = x.rows(), p = x.cols();
  MatchReport rep;
  rep.recovered.assign(n, 0);
  rep.unmatchable.assign(n, 0);
  Vector row_norm2(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    row_norm2[k] = dot(x.row(k), x.row(k));
    if (row_norm2[k] == 0.0) rep.unmatchable[k] = 1;
  }
  for (const auto& c : cands)
    if (c.s.size() != p) throw DimensionError("match_rows: candidate length differs from p");
  rep.matches.resize(cands.size());
  const auto count = static_cast<std::ptrdiff_t>(cands.size());
#pragma omp parallel for schedule(static) if (cands.size() * n * p > 1000000)
  for (std::ptrdiff_t cc = 0; cc < count; ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    const auto& s = cands[c].s;
    RowMatch best;
    best.candidate = c;
    const double s_norm = norm2(s);
    for (std::size_t k = 0; k < n && s_norm > 0.0; ++k) {
      if (rep.unmatchable[k]) continue;
      auto xk = x.row(k);
      const double lambda = dot(s, xk) / row_norm2[k];
      double acc = 0.0;
      for (std::size_t j = 0; j < p; ++j) {
        const double d = s[j] - lambda * xk[j];
        acc += d * d;
      }
      const double mismatch = std::sqrt(acc) / s_norm;
      if (mismatch < best.mismatch) {
        best.mismatch = mismatch;
        best.row = k;
        best.scale = lambda;
      }
    }
    if (!(best.mismatch <= match_tol)) best.row = kNoRow;
    rep.matches[c] = best;
  }
  for (const auto& m : rep.matches)
    if (m.row != kNoRow) rep.recovered[m.row] = 1;
  rep.rows_recovered = static_cast<std::size_t>(std::count(rep.recovered.begin(), rep.recovered.end(), 1));
  return rep;
}

SparsityReport sparsity_separation(const CoefficientMatrix& x, std::size_t combos, std::uint64_t seed) {
  if (combos == 0) throw std::invalid_argument("sparsity_separation: combos must be positive");
  const std::size_t n = x.x.rows(), p = x.x.cols();
  SparsityReport rep;
  const double tp = x.params.theta * static_cast<double>(p);
  rep.upper = 10.0 / 9.0 * tp;
  rep.lower = 11.0 / 9.0 * tp;
  rep.row_l0.assign(n, 0);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < p; ++j)
      if (x.x(k, j) != 0.0) ++rep.row_l0[k];
    rep.max_row_l0 = std::max(rep.max_row_l0, rep.row_l0[k]);
    if (rep.row_l0[k] == 0) ++rep.zero_rows;
  }
  if (n < 2) return rep;

  Rng rng(named_seed(seed, "combinations"));
  std::vector<std::size_t> rows(n);
  Vector comb(p);
  for (std::size_t t = 0; t < combos; ++t) {
    const std::size_t k = 2 + rng.below(n - 1);
    std::iota(rows.begin(), rows.end(), 0);
    for (std::size_t a = 0; a < k; ++a) std::swap(rows[a], rows[a + rng.below(n - a)]);
    std::fill(comb.begin(), comb.end(), 0.0);
    for (std::size_t a = 0; a < k; ++a) {
      double coef = 0.0;
      while (coef == 0.0) coef = rng.normal();
      auto xr = x.x.row(rows[a]);
      for (std::size_t j = 0; j < p; ++j) comb[j] += coef * xr[j];
    }
    const double cut = 1e-12 * max_abs(comb);
    const auto l0 = static_cast<std::size_t>(
        std::count_if(comb.begin(), comb.end(), [cut](double v) { return std::abs(v) > cut; }));
    rep.min_combo_l0 = std::min(rep.min_combo_l0, l0);
    ++rep.combos;
  }
  return rep;
}

MarginalReport check_marginal_lower_bound(const DistributionSpec& dist, double theta, std::size_t n,
                                          std::span<const double> v, std::size_t mc_samples,
                                          std::uint64_t seed) {
  if (mc_samples < 10000) throw PreconditionError("at least 1e4 Monte-Carlo samples are required");
  if (v.size() != n) throw DimensionError("direction has wrong dimension");
  MarginalReport rep;
  rep.rhs = mean_abs(dist) / 8.0 * std::sqrt(theta / static_cast<double>(n)) * norm1(v);
  Rng rng(named_seed(seed, "marginal"));
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t t = 0; t < mc_samples; ++t) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (rng.bernoulli(theta)) acc += v[i] * sample(dist, rng);
    const double a = std::abs(acc);
    sum += a;
    sum_sq += a * a;
  }
  const double m = static_cast<double>(mc_samples);
  rep.lhs = sum / m;
  const double var = std::max(0.0, (sum_sq - m * rep.lhs * rep.lhs) / (m - 1.0));
  rep.std_err = std::sqrt(var / m);
  rep.pass = rep.lhs >= rep.rhs - 3.0 * rep.std_err;
  return rep;
}

PartitionReport check_partition_inequality(const CoefficientMatrix& x,
                                           std::span<const std::size_t> subset,
                                           std::size_t v_samples, std::uint64_t seed) {
  const std::size_t n = x.x.rows(), p = x.x.cols();
  if (4 * subset.size() >= p) throw PreconditionError("|S| must be below p/4");
  std::vector<char> in_s(p, 0);
  for (std::size_t j : subset) {
    if (j >= p) throw DimensionError("subset index out of range");
    if (in_s[j]) throw std::invalid_argument("subset indices must be distinct");
    in_s[j] = 1;
  }
  const double c = static_cast<double>(p) * mean_abs(x.params.dist) / 32.0 *
                   std::sqrt(x.params.theta / static_cast<double>(n));

  std::vector<Vector> dirs;
  Rng rng(named_seed(seed, "partition"));
  for (std::size_t t = 0; t < v_samples; ++t) {
    Vector v(n);
    for (double& e : v) e = rng.normal();
    dirs.push_back(std::move(v));
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (double sgn : {1.0, -1.0}) {
      Vector v(n, 0.0);
      v[i] = sgn;
      dirs.push_back(std::move(v));
    }
  }

  PartitionReport rep;
  Vector prod(p);
  for (const auto& v : dirs) {
    const double v1 = norm1(v);
    if (v1 == 0.0) continue;
    std::fill(prod.begin(), prod.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (v[i] == 0.0) continue;
      auto xr = x.x.row(i);
      for (std::size_t j = 0; j < p; ++j) prod[j] += v[i] * xr[j];
    }
    double total = 0.0, on_s = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      total += std::abs(prod[j]);
      if (in_s[j]) on_s += std::abs(prod[j]);
    }
    const double margin = (total - 2.0 * on_s - c * v1) / v1;
    ++rep.checked;
    if (margin > 0.0) ++rep.passed;
    rep.worst_margin = std::min(rep.worst_margin, margin);
  }
  return rep;
}

std::vector<std::size_t> random_subset(std::size_t p, std::size_t size, std::uint64_t seed) {
  if (size > p) throw std::invalid_argument("subset larger than the ground set");
  std::vector<std::size_t> idx(p);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(named_seed(seed, "subset"));
  for (std::size_t a = 0; a < size; ++a) std::swap(idx[a], idx[a + rng.below(p - a)]);
  idx.resize(size);
  std::sort(idx.begin(), idx.end());
  return idx;
}

RestrictedReport check_restricted_one_sparse(const Matrix& xj, std::span<const double> b,
                                             double gamma, const SolverOptions& opts) {
  if (b.size() != xj.rows()) throw DimensionError("b must have one entry per row of XJ");
  if (max_abs(b) == 0.0) throw ZeroConstraint("b is zero");
  RestrictedReport rep;
  for (std::size_t k = 1; k < b.size(); ++k)
    if (std::abs(b[k]) > std::abs(b[rep.argmax])) rep.argmax = k;
  double second = 0.0;
  for (std::size_t k = 0; k < b.size(); ++k)
    if (k != rep.argmax) second = std::max(second, std::abs(b[k]));
  if (second > (1.0 - gamma) * std::abs(b[rep.argmax]) * (1.0 + 1e-12)) {
    throw PreconditionError("second largest |b| exceeds (1 - gamma) times the largest");
  }
  LpSolution sol = solve_l1({xj, b}, opts);
  rep.status = sol.status;
  rep.z = std::move(sol.w);
  const double cut = 1e-8 * max_abs(rep.z);
  for (std::size_t k = 0; k < rep.z.size(); ++k)
    if (std::abs(rep.z[k]) > cut) rep.support.push_back(k);
  rep.pass = rep.status == LpStatus::Optimal && rep.support.size() == 1 && rep.support[0] == rep.argmax;
  return rep;
}

RestrictedInstance sample_restricted_instance(std::size_t s, std::size_t p, double theta,
                                              const DistributionSpec& dist, double gamma,
                                              std::uint64_t seed) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0, 1]");
  ModelParams mp{s, p, theta, dist, named_seed(seed, "restricted-x")};
  RestrictedInstance inst{sample_coefficients(mp).x, Vector(s)};
  Rng rng(named_seed(seed, "restricted-b"));
  const std::size_t top = rng.below(s);
  for (std::size_t k = 0; k < s; ++k) {
    if (k == top) {
      inst.b[k] = rng.bernoulli(0.5) ? 1.0 : -1.0;
    } else {
      inst.b[k] = (1.0 - gamma) * (2.0 * rng.uniform() - 1.0);
    }
  }
  return inst;
}

std::string_view to_string(WMethod m) {
  return m == WMethod::VertexMax ? "vertex" : "vertex+search";
}

WMethod parse_w_method(std::string_view text) {
  if (text == "vertex") return WMethod::VertexMax;
  if (text == "vertex+search" || text == "search") return WMethod::VertexPlusRandomSearch;
  throw std::invalid_argument("unknown W method '" + std::string(text) + "'");
}

double WEstimate::median() const {
  if (values.empty()) return 0.0;
  std::vector<double> v = values;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  if (v.size() % 2 == 1) return v[mid];
  const double hi = v[mid];
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double vertex_max(const Matrix& z, double expected_abs) {
  double best = 0.0;
  const double p = static_cast<double>(z.cols());
  for (std::size_t j = 0; j < z.rows(); ++j) {
    double acc = 0.0;
    for (double v : z.row(j)) acc += std::abs(v);
    best = std::max(best, std::abs(acc / p - expected_abs));
  }
  return best;
}

namespace {

// (1/cols) sum_i |x^T z_i| over the columns of z.
double mean_abs_projection(const Matrix& z, const Vector& x) {
  Vector prod(z.cols(), 0.0);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    if (x[i] == 0.0) continue;
    auto row = z.row(i);
    for (std::size_t j = 0; j < z.cols(); ++j) prod[j] += x[i] * row[j];
  }
  return norm1(prod) / static_cast<double>(z.cols());
}

double search_w(const Matrix& z, const Matrix& reference, std::size_t steps, Rng& rng,
                double start_value) {
  const std::size_t n = z.rows();
  auto value = [&](const Vector& x) {
    return std::abs(mean_abs_projection(z, x) - mean_abs_projection(reference, x));
  };
  // Start from the best vertex.
  Vector best_x(n, 0.0);
  double best = -1.0;
  for (std::size_t j = 0; j < n; ++j) {
    Vector x(n, 0.0);
    x[j] = 1.0;
    const double v = value(x);
    if (v > best) {
      best = v;
      best_x = x;
    }
  }
  double sigma = 0.5;
  for (std::size_t t = 0; t < steps; ++t) {
    Vector x = best_x;
    for (double& e : x) e += sigma * rng.normal();
    const double l1 = norm1(x);
    if (l1 == 0.0) continue;
    for (double& e : x) e /= l1;
    const double v = value(x);
    if (v > best) {
      best = v;
      best_x = std::move(x);
    } else {
      sigma = std::max(0.01, sigma * 0.9);
    }
  }
  return std::max(start_value, best);
}

}  // namespace

WEstimate estimate_W(const ModelParams& params, const WOptions& opts) {
  validate(params);
  if (opts.trials == 0) throw std::invalid_argument("estimate_W: trials must be positive");
  if (opts.method == WMethod::VertexPlusRandomSearch && opts.mc_samples < 100000) {
    throw PreconditionError("random search needs at least 1e5 Monte-Carlo draws");
  }
  WEstimate est;
  est.p = params.p;
  est.theta = params.theta;
  est.trials = opts.trials;
  est.method = opts.method;
  est.values.assign(opts.trials, 0.0);
  const double expected = params.theta * mean_abs(params.dist);
  const std::uint64_t base = named_seed(params.seed, "w-trials");
  const auto trials = static_cast<std::ptrdiff_t>(opts.trials);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t tt = 0; tt < trials; ++tt) {
    const auto t = static_cast<std::size_t>(tt);
    ModelParams mp = params;
    mp.seed = substream_seed(base, t);
    const Matrix z = sample_coefficients(mp).x;
    double w = vertex_max(z, expected);
    if (opts.method == WMethod::VertexPlusRandomSearch) {
      ModelParams ref = params;
      ref.p = opts.mc_samples;
      ref.seed = named_seed(mp.seed, "w-reference");
      Rng rng(named_seed(mp.seed, "w-search"));
      w = search_w(z, sample_coefficients(ref).x, opts.search_steps, rng, w);
    }
    est.values[t] = w;
  }
  return est;
}

}  // namespace spud
