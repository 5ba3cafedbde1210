#include <doctest.h>

#include <sstream>

#include "spud/config.hpp"

using namespace spud;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream is(text);
  return parse_config(is);
}

}  // namespace

TEST_CASE("full config parses") {
  const auto cfg = parse(R"(
# sweep
[run]
seed = 12345
variant = dc, allpairs
trials = 3
threads = 2

[model]
n = 4, 8
p = 100,200
theta = 0.25
dist = gaussian, uniform:0.8
dictionary = orthogonal

[solver]
method = standard
zero_tol = 1e-9
dedup = false

[output]
csv = out.csv
timings = true

[bounds]
checks = w, restricted
w_method = vertex+search
gamma = 0.5
)");
  CHECK(cfg.seed == 12345u);
  CHECK(cfg.variants == std::vector<Variant>{Variant::DC, Variant::AllPairs});
  CHECK(cfg.trials == 3);
  CHECK(cfg.n_values == std::vector<std::size_t>{4, 8});
  CHECK(cfg.p_values == std::vector<std::size_t>{100, 200});
  CHECK(cfg.dists.size() == 2);
  CHECK(cfg.dists[1] == DistributionSpec::uniform(0.8));
  CHECK(cfg.dictionary == DictKind::Orthogonal);
  CHECK(cfg.solver.method == LpMethod::StandardForm);
  CHECK(cfg.zero_tol == 1e-9);
  CHECK_FALSE(cfg.dedup);
  CHECK(cfg.summary_path() == "out.csv.summary.csv");
  CHECK(cfg.bounds.checks == std::vector<std::string>{"w", "restricted"});
  CHECK(cfg.bounds.w_method == WMethod::VertexPlusRandomSearch);
}

TEST_CASE("seed is required, never defaulted") {
  const auto cfg = parse("[run]\ntrials = 1\n");
  CHECK_FALSE(cfg.seed.has_value());
  CHECK_THROWS_AS(cfg.require_seed(), ConfigError);
}

TEST_CASE("unknown sections and keys fail with a line number") {
  CHECK_THROWS_WITH_AS(parse("[run]\nseed = 1\nbogus = 2\n"), doctest::Contains("line 3"), ConfigError);
  CHECK_THROWS_AS(parse("[nope]\n"), ConfigError);
  CHECK_THROWS_AS(parse("seed = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[run]\nseed\n"), ConfigError);
  CHECK_THROWS_AS(parse("[run]\nseed = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[model]\ndist = cauchy\n"), ConfigError);
  CHECK_THROWS_AS(parse("[run]\nvariant = dc,\n"), ConfigError);
  CHECK_THROWS_AS(parse("[bounds]\nchecks = w, lemma9\n"), ConfigError);
}

TEST_CASE("cross-field validation") {
  CHECK_THROWS_AS(parse("[run]\ntrials = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("[model]\np = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[model]\ntheta = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse("[bounds]\nmc_samples = 100\n"), ConfigError);
  CHECK_THROWS_AS(parse("[bounds]\ngamma = 0\n"), ConfigError);
  // 0.25 <= alpha / sqrt(8) needs alpha >= 0.7072.
  CHECK_NOTHROW(parse("[model]\nn = 8\ntheta = 0.25\nalpha = 0.75\n"));
  CHECK_THROWS_AS(parse("[model]\nn = 8\ntheta = 0.25\nalpha = 0.5\n"), ConfigError);
}

TEST_CASE("variant names") {
  CHECK(parse_variant("dc") == Variant::DC);
  CHECK(to_string(Variant::AllPairs) == "allpairs");
  CHECK_THROWS(parse_variant("DC"));
}
