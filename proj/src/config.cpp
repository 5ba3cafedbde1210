#include "spud/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <map>

namespace spud {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(trim(s.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  for (auto item : out)
    if (item.empty()) throw ConfigError("empty list item");
  return out;
}

template <class T>
T parse_number(std::string_view s) {
  T value{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ConfigError("bad number '" + std::string(s) + "'");
  }
  return value;
}

double parse_real(std::string_view s) {
  const double v = parse_number<double>(s);
  if (!std::isfinite(v)) throw ConfigError("non-finite number '" + std::string(s) + "'");
  return v;
}

bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError("bad boolean '" + std::string(s) + "'");
}

template <class T, class F>
std::vector<T> parse_list(std::string_view s, F one) {
  std::vector<T> out;
  for (auto item : split_list(s)) out.push_back(one(item));
  return out;
}

std::size_t parse_size(std::string_view s) { return parse_number<std::size_t>(s); }

template <class F>
auto wrap_invalid(F f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"run.seed", [](auto& c, auto v) { c.seed = parse_number<std::uint64_t>(v); }},
      {"run.variant",
       [](auto& c, auto v) {
         c.variants = parse_list<Variant>(v, [](auto x) { return wrap_invalid([&] { return parse_variant(x); }); });
       }},
      {"run.trials", [](auto& c, auto v) { c.trials = parse_size(v); }},
      {"run.threads", [](auto& c, auto v) { c.threads = parse_number<int>(v); }},
      {"model.n", [](auto& c, auto v) { c.n_values = parse_list<std::size_t>(v, parse_size); }},
      {"model.p", [](auto& c, auto v) { c.p_values = parse_list<std::size_t>(v, parse_size); }},
      {"model.theta", [](auto& c, auto v) { c.theta_values = parse_list<double>(v, parse_real); }},
      {"model.dist",
       [](auto& c, auto v) {
         c.dists = parse_list<DistributionSpec>(
             v, [](auto x) { return wrap_invalid([&] { return parse_distribution(x); }); });
       }},
      {"model.dictionary",
       [](auto& c, auto v) { c.dictionary = wrap_invalid([&] { return parse_dict_kind(v); }); }},
      {"model.alpha", [](auto& c, auto v) { c.alpha = parse_real(v); }},
      {"solver.method",
       [](auto& c, auto v) {
         if (v == "dual") c.solver.method = LpMethod::DualSimplex;
         else if (v == "standard") c.solver.method = LpMethod::StandardForm;
         else throw ConfigError("unknown solver method '" + std::string(v) + "'");
       }},
      {"solver.feas_tol", [](auto& c, auto v) { c.solver.feas_tol = parse_real(v); }},
      {"solver.opt_tol", [](auto& c, auto v) { c.solver.opt_tol = parse_real(v); }},
      {"solver.reduced_cost_tol", [](auto& c, auto v) { c.solver.reduced_cost_tol = parse_real(v); }},
      {"solver.max_pivots", [](auto& c, auto v) { c.solver.max_pivots = parse_number<long>(v); }},
      {"solver.zero_tol", [](auto& c, auto v) { c.zero_tol = parse_real(v); }},
      {"solver.rank_tol", [](auto& c, auto v) { c.rank_tol = parse_real(v); }},
      {"solver.match_tol", [](auto& c, auto v) { c.match_tol = parse_real(v); }},
      {"solver.dedup", [](auto& c, auto v) { c.dedup = parse_bool(v); }},
      {"output.csv", [](auto& c, auto v) { c.csv = std::string(v); }},
      {"output.summary", [](auto& c, auto v) { c.summary = std::string(v); }},
      {"output.timings", [](auto& c, auto v) { c.timings = parse_bool(v); }},
      {"bounds.checks",
       [](auto& c, auto v) {
         c.bounds.checks.clear();
         for (auto x : split_list(v)) {
           if (x != "w" && x != "marginal" && x != "partition" && x != "restricted") {
             throw ConfigError("unknown bounds check '" + std::string(x) + "'");
           }
           c.bounds.checks.emplace_back(x);
         }
       }},
      {"bounds.w_trials", [](auto& c, auto v) { c.bounds.w_trials = parse_size(v); }},
      {"bounds.w_method",
       [](auto& c, auto v) { c.bounds.w_method = wrap_invalid([&] { return parse_w_method(v); }); }},
      {"bounds.w_search_steps", [](auto& c, auto v) { c.bounds.w_search_steps = parse_size(v); }},
      {"bounds.w_mc_samples", [](auto& c, auto v) { c.bounds.w_mc_samples = parse_size(v); }},
      {"bounds.mc_samples", [](auto& c, auto v) { c.bounds.mc_samples = parse_size(v); }},
      {"bounds.directions", [](auto& c, auto v) { c.bounds.directions = parse_size(v); }},
      {"bounds.partition_trials", [](auto& c, auto v) { c.bounds.partition_trials = parse_size(v); }},
      {"bounds.partition_subset", [](auto& c, auto v) { c.bounds.partition_subset = parse_size(v); }},
      {"bounds.restricted_instances",
       [](auto& c, auto v) { c.bounds.restricted_instances = parse_size(v); }},
      {"bounds.restricted_s", [](auto& c, auto v) { c.bounds.restricted_s = parse_size(v); }},
      {"bounds.restricted_p", [](auto& c, auto v) { c.bounds.restricted_p = parse_size(v); }},
      {"bounds.restricted_theta", [](auto& c, auto v) { c.bounds.restricted_theta = parse_real(v); }},
      {"bounds.gamma", [](auto& c, auto v) { c.bounds.gamma = parse_real(v); }},
  };
  return table;
}

}  // namespace

std::string_view to_string(Variant v) { return v == Variant::DC ? "dc" : "allpairs"; }

Variant parse_variant(std::string_view text) {
  if (text == "dc") return Variant::DC;
  if (text == "allpairs") return Variant::AllPairs;
  throw std::invalid_argument("unknown variant '" + std::string(text) + "'");
}

std::uint64_t ExperimentConfig::require_seed() const {
  if (!seed) throw ConfigError("no seed given ([run] seed or --seed)");
  return *seed;
}

std::string ExperimentConfig::summary_path() const {
  return summary.empty() ? csv + ".summary.csv" : summary;
}

ExperimentConfig parse_config(std::istream& is) {
  ExperimentConfig cfg;
  std::string section;
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + "unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (section != "run" && section != "model" && section != "solver" && section != "output" &&
          section != "bounds") {
        throw ConfigError(where + "unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + "expected key = value");
    if (section.empty()) throw ConfigError(where + "key outside of a section");
    const auto key = std::string(trim(line.substr(0, eq)));
    const auto value = trim(line.substr(eq + 1));
    const auto it = setters().find(section + "." + key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    if (value.empty()) throw ConfigError(where + "empty value for '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path + "'");
  return parse_config(is);
}

void validate(const ExperimentConfig& cfg) {
  if (cfg.variants.empty() || cfg.n_values.empty() || cfg.p_values.empty() ||
      cfg.theta_values.empty() || cfg.dists.empty()) {
    throw ConfigError("grids must be non-empty");
  }
  if (cfg.trials == 0) throw ConfigError("trials must be at least 1");
  if (cfg.threads < 0) throw ConfigError("threads must be non-negative");
  for (auto n : cfg.n_values)
    if (n == 0) throw ConfigError("n must be positive");
  for (auto p : cfg.p_values)
    if (p < 2) throw ConfigError("p must be at least 2");
  for (double t : cfg.theta_values)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("theta must lie in [0, 1]");
  if (cfg.alpha < 0.0) throw ConfigError("alpha must be non-negative");
  if (cfg.alpha > 0.0) {
    for (auto n : cfg.n_values) {
      for (double t : cfg.theta_values) {
        ModelParams mp;
        mp.n = n;
        mp.theta = t;
        if (!in_theorem_regime(mp, cfg.alpha)) {
          throw ConfigError("theta = " + std::to_string(t) + " is outside [2/n, alpha/sqrt(n)] for n = " +
                            std::to_string(n));
        }
      }
    }
  }
  if (!(cfg.zero_tol > 0.0) || !(cfg.rank_tol > 0.0) || !(cfg.match_tol > 0.0)) {
    throw ConfigError("tolerances must be positive");
  }
  if (cfg.csv.empty()) throw ConfigError("output csv path is empty");
  const auto& b = cfg.bounds;
  if (b.w_trials == 0 || b.restricted_instances == 0 || b.partition_trials == 0) {
    throw ConfigError("bounds trial counts must be positive");
  }
  if (b.mc_samples < 10000) throw ConfigError("mc_samples must be at least 1e4");
  if (b.w_method == WMethod::VertexPlusRandomSearch && b.w_mc_samples < 100000) {
    throw ConfigError("w_mc_samples must be at least 1e5 for the search method");
  }
  if (!(b.gamma > 0.0 && b.gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (b.restricted_s == 0 || b.restricted_p == 0) throw ConfigError("restricted sizes must be positive");
  if (!(b.restricted_theta >= 0.0 && b.restricted_theta <= 1.0)) {
    throw ConfigError("restricted_theta must lie in [0, 1]");
  }
}

}  // namespace spud
