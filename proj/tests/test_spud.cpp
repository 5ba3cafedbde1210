#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "spud/analysis.hpp"
#include "spud/model.hpp"
#include "spud/spud.hpp"

using namespace spud;

namespace {

struct Planted {
  Dictionary a;
  CoefficientMatrix x;
  Matrix y;
};

Planted planted(std::size_t n, std::size_t p, double theta, std::uint64_t seed) {
  Planted d{sample_dictionary(n, DictKind::GaussianInvertible, seed),
            sample_coefficients({n, p, theta, DistributionSpec::gaussian(), seed}), {}};
  d.y = synthesize(d.a, d.x);
  return d;
}

}  // namespace

TEST_CASE("count_l0 uses a relative threshold") {
  const Vector s{1.0, 1e-9, -0.5, 0.0, 2e-8};
  CHECK(count_l0(s, 1e-8) == 3);
  CHECK(count_l0(Vector{0.0, 0.0}, 1e-8) == 0);
}

TEST_CASE("normalize_candidate") {
  Candidate c;
  c.w = {2.0, -4.0};
  c.s = {-3.0, 1.0, 3.0};
  const auto nc = normalize_candidate(c);
  CHECK(nc.s == Vector{1.0, -1.0 / 3.0, -1.0});
  CHECK(nc.w == Vector{-2.0 / 3.0, 4.0 / 3.0});
  c.s = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(normalize_candidate(c), ZeroCandidate);
}

TEST_CASE("rank-one problem: every nonzero pair recovers the row") {
  const Matrix x{{1.0, 0.0, -2.0, 3.0}};
  const Matrix y = matmul(Matrix{{5.0}}, x);
  SpudOptions opts;
  opts.dedup = false;
  const auto cs = er_spud_all_pairs(y, opts);
  CHECK(cs.attempted == 6);
  // y_0 + y_2 = -5 is still nonzero; only exact cancellations are skipped.
  CHECK(cs.skipped == 0);
  CHECK(cs.candidates.size() == 6);
  for (const auto& c : cs.candidates) CHECK(c.l0 == 3);
  const auto res = greedy_select(cs.candidates, y, 1, opts);
  REQUIRE(res.status == RecoveryStatus::Complete);
  CHECK(res.a_hat(0, 0) * res.x_hat(0, 3) == doctest::Approx(15.0));
}

TEST_CASE("cancelling pairs are skipped") {
  const Matrix y{{1.0, -1.0, 2.0}};
  const auto cs = er_spud_all_pairs(y);
  CHECK(cs.attempted == 3);
  CHECK(cs.skipped == 1);
}

TEST_CASE("parallel all-pairs equals the serial reference") {
  const auto d = planted(4, 60, 0.5, 8);
  for (bool dedup : {false, true}) {
    SpudOptions opts;
    opts.dedup = dedup;
    const auto par = er_spud_all_pairs(d.y, opts), ser = serial::er_spud_all_pairs(d.y, opts);
    REQUIRE(par.candidates.size() == ser.candidates.size());
    CHECK(par.produced == ser.produced);
    CHECK(par.lp_pivots == ser.lp_pivots);
    for (std::size_t k = 0; k < par.candidates.size(); ++k) {
      CHECK(par.candidates[k].i == ser.candidates[k].i);
      CHECK(par.candidates[k].j == ser.candidates[k].j);
      CHECK(par.candidates[k].s == ser.candidates[k].s);
    }
  }
}

TEST_CASE("dedup keeps one of each row and the first occurrence") {
  const auto d = planted(4, 60, 0.5, 9);
  SpudOptions raw;
  raw.dedup = false;
  const auto all = er_spud_all_pairs(d.y, raw);
  const auto uniq = er_spud_all_pairs(d.y);
  CHECK(uniq.produced == all.produced);
  CHECK(uniq.candidates.size() < all.candidates.size());
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& c : all.candidates) seen.insert({c.i, c.j});
  for (const auto& c : uniq.candidates) CHECK(seen.count({c.i, c.j}) == 1);
  CHECK(match_rows(uniq.candidates, d.x.x).rows_recovered == match_rows(all.candidates, d.x.x).rows_recovered);
}

TEST_CASE("dc variant solves one LP per group") {
  const auto d = planted(4, 61, 0.5, 10);
  SpudOptions opts;
  opts.dedup = false;
  const auto cs = er_spud_dc(d.y, 123, opts);
  CHECK(cs.attempted == 30);
  std::set<std::size_t> cols, groups;
  for (const auto& c : cs.candidates) {
    CHECK(c.i < c.j);
    cols.insert(c.i);
    cols.insert(c.j);
    groups.insert(c.group);
  }
  CHECK(cols.size() == 2 * cs.candidates.size());
  CHECK(groups.size() == cs.candidates.size());
  const auto again = er_spud_dc(d.y, 123, opts);
  REQUIRE(again.candidates.size() == cs.candidates.size());
  for (std::size_t k = 0; k < cs.candidates.size(); ++k) CHECK(again.candidates[k].s == cs.candidates[k].s);
}

TEST_CASE("end to end recovery on a small planted instance") {
  const auto d = planted(4, 150, 0.5, 21);
  const auto cs = er_spud_all_pairs(d.y);
  CHECK(match_rows(cs.candidates, d.x.x).rows_recovered == 4);
  const auto res = greedy_select(cs.candidates, d.y, 4);
  REQUIRE(res.status == RecoveryStatus::Complete);
  const Matrix recon = matmul(res.a_hat, res.x_hat);
  for (std::size_t k = 0; k < recon.data().size(); ++k)
    CHECK(recon.data()[k] == doctest::Approx(d.y.data()[k]).epsilon(1e-8));
  // Selected candidates come out in nondecreasing l0.
  for (std::size_t k = 1; k < res.selected.size(); ++k)
    CHECK(cs.candidates[res.selected[k - 1]].l0 <= cs.candidates[res.selected[k]].l0);
}

TEST_CASE("greedy reports rank deficiency") {
  Candidate c;
  c.s = {1.0, 0.0, 2.0};
  c.l0 = 2;
  const std::vector<Candidate> cands{c, c};
  const Matrix y{{1.0, 0.0, 2.0}, {0.0, 1.0, 1.0}};
  const auto res = greedy_select(cands, y, 2);
  CHECK(res.status == RecoveryStatus::RankDeficient);
  CHECK(res.selected.size() == 1);
  CHECK(res.a_hat.empty());
}

TEST_CASE("greedy prefers sparser candidates and breaks ties by index") {
  Candidate dense, sparse_a, sparse_b;
  dense.s = {1.0, 1.0, 1.0, 1.0};
  sparse_a.s = {1.0, 0.0, 0.0, 0.0};
  sparse_b.s = {0.0, 1.0, 0.0, 0.0};
  for (auto* c : {&dense, &sparse_a, &sparse_b}) c->l0 = count_l0(c->s, 1e-8);
  const std::vector<Candidate> cands{dense, sparse_b, sparse_a};
  const Matrix y{{1.0, 0.0, 0.0, 0.0}, {0.0, 1.0, 0.0, 0.0}};
  const auto res = greedy_select(cands, y, 2);
  REQUIRE(res.status == RecoveryStatus::Complete);
  CHECK(res.selected == std::vector<std::size_t>{1, 2});
}

TEST_CASE("candidate files round trip") {
  const auto d = planted(3, 20, 0.6, 4);
  const auto cs = er_spud_all_pairs(d.y);
  std::stringstream ss;
  write_candidates(ss, cs.candidates);
  const auto back = read_candidates(ss);
  REQUIRE(back.size() == cs.candidates.size());
  for (std::size_t k = 0; k < back.size(); ++k) {
    CHECK(back[k].s == cs.candidates[k].s);
    CHECK(back[k].l0 == cs.candidates[k].l0);
  }
  std::stringstream bad("0 1 5 1.0 1 0\n");
  CHECK_THROWS_AS(read_candidates(bad), IoError);
}

TEST_CASE("zero Y yields no candidates") {
  const Matrix y(3, 10, 0.0);
  const auto dc = er_spud_dc(y, 1), ap = er_spud_all_pairs(y);
  CHECK(dc.candidates.empty());
  CHECK(dc.skipped == 5);
  CHECK(ap.candidates.empty());
  CHECK(ap.skipped == 45);
}

TEST_CASE("dc with p = 2 and Y = I") {
  const auto cs = er_spud_dc(Matrix::identity(2), 4);
  REQUIRE(cs.candidates.size() == 1);
  CHECK(cs.candidates[0].objective == doctest::Approx(1.0));
  CHECK(norm1(cs.candidates[0].s) == doctest::Approx(1.0));
}

TEST_CASE("pairs of zero columns are skipped, the rest solved") {
  const Matrix y{{0.0, 1.0, 0.0, 2.0}, {0.0, -1.0, 0.0, 1.0}};
  SpudOptions opts;
  opts.dedup = false;
  const auto cs = er_spud_all_pairs(y, opts);
  CHECK(cs.attempted == 6);
  CHECK(cs.skipped == 1);
  CHECK(cs.produced == 5);
}

TEST_CASE("pair constraint through two rows returns a row of X") {
  const Matrix x{{1.0, 0.0, 1.0}, {0.0, 1.0, 1.0}};
  SpudOptions opts;
  opts.dedup = false;
  const auto cs = er_spud_all_pairs(x, opts);
  REQUIRE(cs.candidates.size() == 3);
  const auto& c01 = cs.candidates[0];
  CHECK(c01.i == 0);
  CHECK(c01.j == 1);
  // |w_1| + |w_2| + |w_1 + w_2| >= 2 on the line w_1 + w_2 = 1.
  CHECK(c01.objective == doctest::Approx(2.0));
  CHECK(c01.l0 == 2);
  CHECK(match_rows(std::span(&c01, 1), x).rows_recovered == 1);
}

TEST_CASE("normalize_candidate worked examples") {
  Candidate c;
  c.s = {0.0, -3.0, 1.0};
  CHECK(normalize_candidate(c).s == Vector{0.0, 1.0, -1.0 / 3.0});
  c.s = {1.0};
  CHECK(normalize_candidate(c).s == Vector{1.0});
  c.s = {2.0, 2.0};
  CHECK(normalize_candidate(c).s == Vector{1.0, 1.0});
}

TEST_CASE("greedy worked examples") {
  Candidate one;
  one.s = {0.0, 0.0, 5.0};
  one.l0 = 1;
  const Matrix y1{{0.0, 0.0, 1.0}};
  const auto r1 = greedy_select(std::vector<Candidate>{one}, y1, 1);
  CHECK(r1.status == RecoveryStatus::Complete);
  CHECK(r1.x_hat == Matrix{{0.0, 0.0, 5.0}});

  const Matrix x{{1.0, 0.0, 1.0}, {0.0, 1.0, 1.0}};
  Candidate a, b, sum;
  a.s = {1.0, 0.0, 1.0};
  b.s = {0.0, 1.0, 1.0};
  sum.s = {1.0, 1.0, 2.0};
  for (auto* c : {&a, &b, &sum}) c->l0 = count_l0(c->s, 1e-8);
  // Duplicate of the sparsest row first: the copy is rejected by the rank gate.
  const std::vector<Candidate> cands{sum, a, a, b};
  const auto res = greedy_select(cands, x, 2);
  REQUIRE(res.status == RecoveryStatus::Complete);
  CHECK(res.selected == std::vector<std::size_t>{1, 3});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) CHECK(res.a_hat(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-8));
}

TEST_CASE("candidates lie in the row space of Y") {
  const auto d = planted(4, 80, 0.5, 31);
  const auto cs = er_spud_all_pairs(d.y);
  // Least-squares projection onto the row space: s Y^T (Y Y^T)^-1 Y.
  const Matrix yyt = matmul_transposed(d.y, d.y);
  for (const auto& c : cs.candidates) {
    const Matrix s(1, c.s.size(), c.s);
    const Matrix coef = transpose(lu_solve(yyt, transpose(matmul_transposed(s, d.y))));
    const Matrix proj = matmul(coef, d.y);
    double res = 0.0;
    for (std::size_t k = 0; k < c.s.size(); ++k) res = std::max(res, std::abs(proj(0, k) - c.s[k]));
    CHECK(res <= 1e-8 * norm2(c.s));
  }
}

TEST_CASE("positive column scaling leaves supports unchanged") {
  const auto d = planted(4, 60, 0.5, 32);
  Matrix yd = d.y;
  Rng rng(1);
  for (std::size_t j = 0; j < yd.cols(); ++j) {
    const double s = 0.5 + rng.uniform();
    for (std::size_t i = 0; i < yd.rows(); ++i) yd(i, j) *= s;
  }
  SpudOptions opts;
  opts.dedup = false;
  const auto a = er_spud_all_pairs(d.y, opts), b = er_spud_all_pairs(yd, opts);
  std::multiset<std::size_t> la, lb;
  std::set<std::vector<char>> sa, sb;
  auto support = [](const Vector& s) {
    std::vector<char> m(s.size());
    const double cut = 1e-8 * max_abs(s);
    for (std::size_t k = 0; k < s.size(); ++k) m[k] = std::abs(s[k]) > cut;
    return m;
  };
  for (const auto& c : a.candidates) sa.insert(support(c.s));
  for (const auto& c : b.candidates) sb.insert(support(c.s));
  // The constraints differ (r = y_i + y_j changes under scaling), so compare the
  // supports of the true rows, which both runs find.
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<char> m(60);
    for (std::size_t k = 0; k < 60; ++k) m[k] = d.x.x(i, k) != 0.0;
    CHECK(sa.count(m) == 1);
    CHECK(sb.count(m) == 1);
  }
}

TEST_CASE("dc constraints are a subset of all-pairs constraints at even p") {
  const auto d = planted(4, 40, 0.5, 33);
  SpudOptions opts;
  opts.dedup = false;
  const auto dc = er_spud_dc(d.y, 77, opts);
  const auto ap = er_spud_all_pairs(d.y, opts);
  std::set<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& c : ap.candidates) pairs.insert({c.i, c.j});
  for (const auto& c : dc.candidates) CHECK(pairs.count({c.i, c.j}) == 1);
  CHECK(dc.attempted == 20);
}
