#include "spud/model.hpp"

#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace spud {

namespace {

constexpr double kMaxUniformHalfWidth = 1.2;
constexpr double kRankTol = 1e-9;

Matrix gaussian_matrix(std::size_t n, Rng& rng) {
  Matrix a(n, n);
  for (double& v : a.data()) v = rng.normal();
  return a;
}

// Orthonormalizes the columns of `a` in place (Gram-Schmidt, two passes).
// Returns false if a column collapses.
bool orthonormalize_columns(Matrix& a) {
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < a.cols(); ++j) {
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += a(i, k) * a(i, j);
        for (std::size_t i = 0; i < n; ++i) a(i, j) -= proj * a(i, k);
      }
    }
    double nrm = 0.0;
    for (std::size_t i = 0; i < n; ++i) nrm += a(i, j) * a(i, j);
    nrm = std::sqrt(nrm);
    if (!(nrm > 1e-8)) return false;
    for (std::size_t i = 0; i < n; ++i) a(i, j) /= nrm;
  }
  return true;
}

}  // namespace

DistributionSpec DistributionSpec::uniform(double a) {
  if (!(a > 0.0) || a > kMaxUniformHalfWidth) {
    throw std::invalid_argument("uniform half-width must lie in (0, 1.2]");
  }
  return {DistKind::UniformSym, a};
}

double mean_abs(const DistributionSpec& d) {
  switch (d.kind) {
    case DistKind::StandardGaussian: return std::sqrt(2.0 / std::numbers::pi);
    case DistKind::Rademacher: return 1.0;
    case DistKind::UniformSym: return d.a / 2.0;
  }
  return 0.0;
}

std::string to_string(const DistributionSpec& d) {
  switch (d.kind) {
    case DistKind::StandardGaussian: return "gaussian";
    case DistKind::Rademacher: return "rademacher";
    case DistKind::UniformSym: {
      char buf[64];
      auto res = std::to_chars(buf, buf + sizeof buf, d.a);
      return "uniform:" + std::string(buf, res.ptr);
    }
  }
  return "?";
}

DistributionSpec parse_distribution(std::string_view text) {
  if (text == "gaussian") return DistributionSpec::gaussian();
  if (text == "rademacher") return DistributionSpec::rademacher();
  if (text.starts_with("uniform:")) {
    auto num = text.substr(8);
    double a = 0.0;
    auto res = std::from_chars(num.data(), num.data() + num.size(), a);
    if (res.ec != std::errc() || res.ptr != num.data() + num.size()) {
      throw std::invalid_argument("bad uniform half-width '" + std::string(num) + "'");
    }
    return DistributionSpec::uniform(a);
  }
  throw std::invalid_argument("unknown distribution '" + std::string(text) + "'");
}

std::optional<std::string> model_warning(const DistributionSpec& d) {
  if (mean_abs(d) < 0.1) {
    return "E|R| = " + std::to_string(mean_abs(d)) + " is below 1/10 for " + to_string(d);
  }
  return std::nullopt;
}

double sample(const DistributionSpec& d, Rng& rng) {
  switch (d.kind) {
    case DistKind::StandardGaussian: {
      double v = 0.0;
      while (v == 0.0) v = rng.normal();
      return v;
    }
    case DistKind::Rademacher: return rng.bernoulli(0.5) ? 1.0 : -1.0;
    case DistKind::UniformSym: {
      const double mag = d.a * rng.uniform_open0();
      return rng.bernoulli(0.5) ? mag : -mag;
    }
  }
  return 0.0;
}

void validate(const ModelParams& params) {
  if (params.n == 0) throw std::invalid_argument("n must be positive");
  if (params.p == 0) throw std::invalid_argument("p must be positive");
  if (!(params.theta >= 0.0 && params.theta <= 1.0)) {
    throw std::invalid_argument("theta must lie in [0, 1]");
  }
  if (params.dist.kind == DistKind::UniformSym &&
      (!(params.dist.a > 0.0) || params.dist.a > kMaxUniformHalfWidth)) {
    throw std::invalid_argument("uniform half-width must lie in (0, 1.2]");
  }
}

bool in_theorem_regime(const ModelParams& params, double alpha) {
  const double n = static_cast<double>(params.n);
  return params.theta >= 2.0 / n && params.theta <= alpha / std::sqrt(n);
}

CoefficientMatrix sample_coefficients(const ModelParams& params) {
  validate(params);
  const std::size_t n = params.n, p = params.p;
  CoefficientMatrix cm{Matrix(n, p), std::vector<char>(n * p, 0), params};
  const std::uint64_t base = named_seed(params.seed, "coefficients");
  const auto cols = static_cast<std::ptrdiff_t>(p);
#pragma omp parallel for schedule(static) if (n * p > 50000)
  for (std::ptrdiff_t jj = 0; jj < cols; ++jj) {
    const auto j = static_cast<std::size_t>(jj);
    Rng rng(substream_seed(base, j));
    for (std::size_t i = 0; i < n; ++i) {
      if (!rng.bernoulli(params.theta)) continue;
      cm.mask[i * p + j] = 1;
      cm.x(i, j) = sample(params.dist, rng);
    }
  }
  return cm;
}

std::string_view to_string(DictKind k) {
  switch (k) {
    case DictKind::GaussianInvertible: return "gaussian";
    case DictKind::Orthogonal: return "orthogonal";
    case DictKind::Identity: return "identity";
    case DictKind::UserSupplied: return "user";
  }
  return "?";
}

DictKind parse_dict_kind(std::string_view text) {
  if (text == "gaussian") return DictKind::GaussianInvertible;
  if (text == "orthogonal") return DictKind::Orthogonal;
  if (text == "identity") return DictKind::Identity;
  throw std::invalid_argument("unknown dictionary kind '" + std::string(text) + "'");
}

Dictionary sample_dictionary(std::size_t n, DictKind kind, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("dictionary dimension must be positive");
  Rng rng(named_seed(seed, "dictionary"));
  switch (kind) {
    case DictKind::Identity: return {Matrix::identity(n), kind};
    case DictKind::GaussianInvertible:
      while (true) {
        Matrix a = gaussian_matrix(n, rng);
        if (rank(a, kRankTol) == n) return {std::move(a), kind};
      }
    case DictKind::Orthogonal:
      while (true) {
        Matrix a = gaussian_matrix(n, rng);
        if (orthonormalize_columns(a)) return {std::move(a), kind};
      }
    case DictKind::UserSupplied:
      throw std::invalid_argument("user-supplied dictionaries come from make_dictionary");
  }
  return {};
}

Dictionary make_dictionary(Matrix a) {
  if (a.rows() != a.cols() || a.rows() == 0) throw DimensionError("dictionary must be square");
  if (rank(a, kRankTol) != a.rows()) throw SingularMatrix("dictionary is singular");
  return {std::move(a), DictKind::UserSupplied};
}

Matrix synthesize(const Dictionary& a, const CoefficientMatrix& x) {
  if (a.a.cols() != x.x.rows()) throw DimensionError("synthesize: A and X dimensions differ");
  return matmul(a.a, x.x);
}

}  // namespace spud
