#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spud/numerics.hpp"
#include "spud/rng.hpp"

namespace spud {

enum class DistKind { StandardGaussian, Rademacher, UniformSym };

/// Law of the magnitudes R. UniformSym(a) is uniform on [-a, a] and is only
/// accepted for 0 < a <= 1.2, where P(|R| >= t) <= 2 exp(-t^2 / 2) holds.
struct DistributionSpec {
  DistKind kind = DistKind::StandardGaussian;
  double a = 1.0;  // UniformSym half-width

  static DistributionSpec gaussian() { return {DistKind::StandardGaussian, 1.0}; }
  static DistributionSpec rademacher() { return {DistKind::Rademacher, 1.0}; }
  static DistributionSpec uniform(double a);

  bool operator==(const DistributionSpec&) const = default;
};

/// E|R|: sqrt(2/pi), 1 and a/2 respectively.
double mean_abs(const DistributionSpec& d);
/// "gaussian", "rademacher" or "uniform:<a>"; parse accepts the same forms.
std::string to_string(const DistributionSpec& d);
DistributionSpec parse_distribution(std::string_view text);
/// Non-empty when E|R| < 1/10 (allowed, but outside the model assumptions).
std::optional<std::string> model_warning(const DistributionSpec& d);
/// One draw of R; never exactly zero.
double sample(const DistributionSpec& d, Rng& rng);

struct ModelParams {
  std::size_t n = 1;
  std::size_t p = 1;
  double theta = 0.0;
  DistributionSpec dist;
  std::uint64_t seed = 0;
};

/// Throws std::invalid_argument on n == 0, p == 0 or theta outside [0, 1].
void validate(const ModelParams& params);
/// 2/n <= theta <= alpha/sqrt(n).
bool in_theorem_regime(const ModelParams& params, double alpha);

struct CoefficientMatrix {
  Matrix x;
  std::vector<char> mask;  // row-major n x p
  ModelParams params;

  bool active(std::size_t i, std::size_t j) const { return mask[i * x.cols() + j] != 0; }
};

/// X_ij = chi_ij R_ij with chi ~ Bernoulli(theta). Column j draws from its own
/// substream, so the result does not depend on the thread count.
CoefficientMatrix sample_coefficients(const ModelParams& params);

enum class DictKind { GaussianInvertible, Orthogonal, Identity, UserSupplied };
std::string_view to_string(DictKind k);
DictKind parse_dict_kind(std::string_view text);

struct Dictionary {
  Matrix a;
  DictKind kind = DictKind::Identity;
};

Dictionary sample_dictionary(std::size_t n, DictKind kind, std::uint64_t seed);
/// Wraps a caller-provided matrix; throws SingularMatrix unless it has full
/// rank at tolerance 1e-9.
Dictionary make_dictionary(Matrix a);

/// Y = A X.
Matrix synthesize(const Dictionary& a, const CoefficientMatrix& x);

}  // namespace spud
