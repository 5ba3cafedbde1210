#include <doctest.h>

#include <cmath>
#include <set>

#include "spud/analysis.hpp"

using namespace spud;

namespace {

Candidate cand(Vector s) {
  Candidate c;
  c.s = std::move(s);
  c.l0 = count_l0(c.s, 1e-8);
  return c;
}

}  // namespace

TEST_CASE("match_rows up to scaling") {
  const Matrix x{{1.0, 0.0, 2.0}, {0.0, 3.0, 1.0}, {0.0, 0.0, 0.0}};
  const std::vector<Candidate> cands{cand({-0.5, 0.0, -1.0}), cand({1.0, 1.0, 1.0})};
  const auto rep = match_rows(cands, x);
  CHECK(rep.rows_recovered == 1);
  CHECK(rep.recovered == std::vector<char>{1, 0, 0});
  CHECK(rep.unmatchable == std::vector<char>{0, 0, 1});
  CHECK(rep.matches[0].row == 0);
  CHECK(rep.matches[0].scale == doctest::Approx(-0.5));
  CHECK(rep.matches[1].row == kNoRow);
  const std::vector<Candidate> wrong{cand({1.0, 2.0})};
  CHECK_THROWS_AS(match_rows(wrong, x), DimensionError);
}

TEST_CASE("sparsity separation bounds and counts") {
  const auto x = sample_coefficients({5, 2000, 0.1, DistributionSpec::gaussian(), 3});
  const auto rep = sparsity_separation(x, 20, 7);
  CHECK(rep.upper == doctest::Approx(10.0 / 9.0 * 200.0));
  CHECK(rep.lower == doctest::Approx(11.0 / 9.0 * 200.0));
  CHECK(rep.combos == 20);
  std::size_t worst = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    std::size_t l0 = 0;
    for (double v : x.x.row(i)) l0 += v != 0.0;
    CHECK(rep.row_l0[i] == l0);
    worst = std::max(worst, l0);
  }
  CHECK(rep.max_row_l0 == worst);
  // A combination of k rows is supported on the union of their supports.
  CHECK(rep.min_combo_l0 >= *std::min_element(rep.row_l0.begin(), rep.row_l0.end()));
  const auto one = sample_coefficients({1, 100, 0.5, DistributionSpec::gaussian(), 3});
  CHECK(sparsity_separation(one, 10, 1).combos == 0);
}

TEST_CASE("marginal lower bound holds at vertices") {
  for (const auto& d : {DistributionSpec::gaussian(), DistributionSpec::rademacher()}) {
    // E|e_j^T Z| = theta mu exactly, far above (mu / 8) sqrt(theta / n).
    Vector v(10, 0.0);
    v[3] = -1.0;
    const auto rep = check_marginal_lower_bound(d, 0.2, 10, v, 20000, 5);
    CHECK(rep.pass);
    CHECK(rep.lhs == doctest::Approx(0.2 * mean_abs(d)).epsilon(0.05));
  }
  const Vector v(10, 1.0);
  CHECK_THROWS_AS(check_marginal_lower_bound(DistributionSpec::gaussian(), 0.2, 10, v, 100, 1), PreconditionError);
  CHECK_THROWS_AS(check_marginal_lower_bound(DistributionSpec::gaussian(), 0.2, 9, v, 20000, 1), DimensionError);
}

TEST_CASE("partition inequality") {
  const auto x = sample_coefficients({4, 400, 0.5, DistributionSpec::gaussian(), 2});
  const auto subset = random_subset(400, 20, 9);
  const auto rep = check_partition_inequality(x, subset, 30, 4);
  CHECK(rep.checked == 38);
  CHECK(rep.all_pass());
  CHECK(rep.worst_margin > 0.0);
  const auto big = random_subset(400, 100, 9);
  CHECK_THROWS_AS(check_partition_inequality(x, big, 1, 1), PreconditionError);
}

TEST_CASE("random_subset") {
  const auto s = random_subset(50, 20, 1);
  CHECK(s.size() == 20);
  CHECK(std::is_sorted(s.begin(), s.end()));
  CHECK(std::set<std::size_t>(s.begin(), s.end()).size() == 20);
  CHECK(s.back() < 50);
  CHECK(random_subset(50, 20, 1) == s);
}

TEST_CASE("restricted one-sparse on an explicit instance") {
  const Matrix xj{{1.0, 0.0, 2.0}, {0.0, 1.0, 0.0}};
  const Vector b{0.3, -1.0};
  const auto rep = check_restricted_one_sparse(xj, b, 0.5);
  CHECK(rep.pass);
  CHECK(rep.argmax == 1);
  CHECK(rep.support == std::vector<std::size_t>{1});
  CHECK(rep.z[1] == doctest::Approx(-1.0));
  const Vector no_gap{0.9, -1.0};
  CHECK_THROWS_AS(check_restricted_one_sparse(xj, no_gap, 0.5), PreconditionError);
  const Vector zero{0.0, 0.0};
  CHECK_THROWS_AS(check_restricted_one_sparse(xj, zero, 0.5), ZeroConstraint);
}

TEST_CASE("restricted instances respect the gap") {
  const auto inst = sample_restricted_instance(4, 100, 0.1, DistributionSpec::gaussian(), 0.5, 3);
  CHECK(inst.xj.rows() == 4);
  CHECK(inst.xj.cols() == 100);
  CHECK(max_abs(inst.b) == 1.0);
  std::size_t at_one = 0;
  for (double v : inst.b) {
    at_one += std::abs(v) == 1.0;
    if (std::abs(v) != 1.0) CHECK(std::abs(v) <= 0.5);
  }
  CHECK(at_one == 1);
}

TEST_CASE("vertex_max and W") {
  const Matrix z{{1.0, -1.0, 0.0, 0.0}, {2.0, 0.0, 0.0, 0.0}};
  // Row means of |z|: 0.5 and 0.5; deviations from 0.25 are 0.25 each.
  CHECK(vertex_max(z, 0.25) == doctest::Approx(0.25));

  ModelParams mp{6, 50, 0.0, DistributionSpec::gaussian(), 1};
  WOptions wo;
  wo.trials = 5;
  const auto zero = estimate_W(mp, wo);
  for (double v : zero.values) CHECK(v == 0.0);

  mp.theta = 0.3;
  const auto vert = estimate_W(mp, wo);
  wo.method = WMethod::VertexPlusRandomSearch;
  wo.search_steps = 10;
  const auto search = estimate_W(mp, wo);
  for (std::size_t t = 0; t < 5; ++t) {
    CHECK(vert.values[t] > 0.0);
    CHECK(search.values[t] >= vert.values[t]);
  }
  CHECK(parse_w_method(to_string(WMethod::VertexPlusRandomSearch)) == WMethod::VertexPlusRandomSearch);
}

TEST_CASE("W median") {
  WEstimate e;
  e.values = {3.0, 1.0, 2.0, 10.0};
  CHECK(e.median() == doctest::Approx(2.5));
}

TEST_CASE("match_rows worked examples") {
  const Matrix x{{1.0, 0.0, 2.0, 0.0}, {0.0, 3.0, 1.0, 1.0}};
  std::vector<Candidate> exact, scaled;
  for (std::size_t i = 0; i < 2; ++i) {
    Vector r(x.row(i).begin(), x.row(i).end()), s = r;
    for (double& v : s) v *= -7.0;
    exact.push_back(cand(r));
    scaled.push_back(cand(s));
  }
  const auto e = match_rows(exact, x), s = match_rows(scaled, x);
  CHECK(e.rows_recovered == 2);
  CHECK(s.rows_recovered == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(e.matches[k].scale == doctest::Approx(1.0));
    CHECK(s.matches[k].scale == doctest::Approx(-7.0));
  }
  const std::vector<Candidate> sum{cand({1.0, 3.0, 3.0, 1.0})};
  CHECK(match_rows(sum, x).rows_recovered == 0);
}

TEST_CASE("sparsity worked examples") {
  const auto full = sample_coefficients({3, 50, 1.0, DistributionSpec::rademacher(), 1});
  const auto rep = sparsity_separation(full, 5, 1);
  for (auto l0 : rep.row_l0) CHECK(l0 == 50);
  const auto zero = sample_coefficients({3, 50, 0.0, DistributionSpec::gaussian(), 1});
  const auto zr = sparsity_separation(zero, 5, 1);
  CHECK(zr.zero_rows == 3);
  CHECK_FALSE(zr.holds());
}

TEST_CASE("marginal worked examples") {
  const Vector zero(4, 0.0);
  const auto z = check_marginal_lower_bound(DistributionSpec::gaussian(), 0.3, 4, zero, 10000, 1);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs == 0.0);
  CHECK(z.pass);
  const Vector e1{1.0, 0.0, 0.0, 0.0};
  const auto r = check_marginal_lower_bound(DistributionSpec::rademacher(), 0.5, 4, e1, 100000, 2);
  CHECK(r.rhs == doctest::Approx(std::sqrt(0.5 / 4.0) / 8.0));
  CHECK(r.lhs == doctest::Approx(0.5).epsilon(0.02));
  CHECK(r.pass);
  const Vector ones(10, 1.0);
  const auto g = check_marginal_lower_bound(DistributionSpec::gaussian(), 0.2, 10, ones, 10000, 3);
  CHECK(g.pass);
  CHECK(g.lhs - g.rhs > 0.0);
}

TEST_CASE("partition with empty S and at the vertex set") {
  const auto x = sample_coefficients({4, 200, 0.5, DistributionSpec::gaussian(), 5});
  const std::vector<std::size_t> none;
  const auto rep = check_partition_inequality(x, none, 0, 1);
  CHECK(rep.checked == 8);
  CHECK(rep.all_pass());

  int pass = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto xs = sample_coefficients({10, 2000, 0.1, DistributionSpec::gaussian(), 1000 + s});
    pass += check_partition_inequality(xs, random_subset(2000, 499, s), 0, s).all_pass();
  }
  CHECK(pass >= 95);
}

TEST_CASE("restricted worked examples") {
  const Matrix xj{{1.0, -2.0, 0.5}};
  const Vector b{2.0};
  const auto one = check_restricted_one_sparse(xj, b, 0.5);
  CHECK(one.pass);
  CHECK(one.z[0] == doctest::Approx(0.5));
  const Vector b2{1.0, 0.4};
  const auto id = check_restricted_one_sparse(Matrix::identity(2), b2, 0.5);
  CHECK(id.pass);
  CHECK(id.z[0] == doctest::Approx(1.0));
  CHECK(id.z[1] == doctest::Approx(0.0));
}
