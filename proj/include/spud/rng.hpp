#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace spud {

/// SplitMix64 finalizer; used for seeding and for deriving substream seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed of an independent substream keyed by `index` (seed xor hash(index)).
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

/// Seed of a named substream ("dictionary", "pairing", ...).
std::uint64_t named_seed(std::uint64_t seed, std::string_view tag);

/// xoshiro256** with bit-reproducible samplers. Normal variates use the
/// Box-Muller transform so output does not depend on the standard library.
class Rng {
 public:
  static constexpr std::string_view kGaussianSampler = "box-muller";

  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1].
  double uniform_open0();
  double normal();
  bool bernoulli(double prob);
  /// Uniform integer in [0, bound).
  std::uint64_t below(std::uint64_t bound);

 private:
  std::array<std::uint64_t, 4> s_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace spud
