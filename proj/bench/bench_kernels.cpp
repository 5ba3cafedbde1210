#include <benchmark/benchmark.h>

#include "spud/model.hpp"
#include "spud/spud.hpp"

using namespace spud;

namespace {

Matrix gaussian(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (double& v : m.data()) v = rng.normal();
  return m;
}

Matrix planted_y(std::size_t n, std::size_t p) {
  const auto a = sample_dictionary(n, DictKind::GaussianInvertible, 1);
  const auto x = sample_coefficients({n, p, 2.0 / static_cast<double>(n), DistributionSpec::gaussian(), 1});
  return synthesize(a, x);
}

void BM_matmul_serial(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix a = gaussian(n, n, 1), b = gaussian(n, n, 2);
  for (auto _ : st) benchmark::DoNotOptimize(serial::matmul(a, b));
}

void BM_matmul_parallel(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Matrix a = gaussian(n, n, 1), b = gaussian(n, n, 2);
  for (auto _ : st) benchmark::DoNotOptimize(matmul(a, b));
}

void BM_all_pairs_serial(benchmark::State& st) {
  const Matrix y = planted_y(8, static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(serial::er_spud_all_pairs(y));
}

void BM_all_pairs_parallel(benchmark::State& st) {
  const Matrix y = planted_y(8, static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(er_spud_all_pairs(y));
}

}  // namespace

BENCHMARK(BM_matmul_serial)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_matmul_parallel)->Arg(128)->Arg(512)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_all_pairs_serial)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_all_pairs_parallel)->Arg(100)->Arg(200)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
