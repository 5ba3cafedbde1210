#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "spud/analysis.hpp"
#include "spud/config.hpp"
#include "spud/harness.hpp"
#include "spud/rng.hpp"

namespace fs = std::filesystem;
using namespace spud;

namespace {

enum Exit { kOk = 0, kConfig = 2, kIo = 3, kGuardrail = 4 };

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string variant;
  bool force = false;
  int threads = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "config file");
  app->add_option("--seed", c.seed, "master seed (overrides the config)");
  app->add_option("--out", c.out, "output path");
  app->add_option("--variant", c.variant, "dc | allpairs")->check(CLI::IsMember({"dc", "allpairs"}));
  app->add_flag("--force", c.force, "allow all-pairs runs above the size guardrail");
  app->add_option("--threads", c.threads, "OpenMP threads (0 = default)")->check(CLI::NonNegativeNumber);
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = c.seed;
  if (!c.variant.empty()) cfg.variants = {parse_variant(c.variant)};
  if (c.threads > 0) cfg.threads = c.threads;
  validate(cfg);
  return cfg;
}

fs::path out_dir(const std::string& out) {
  fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "'");
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os || !(os << text)) throw IoError("cannot write '" + path.string() + "'");
}

int cmd_gen(const Common& c, std::optional<std::size_t> n, std::optional<std::size_t> p,
            std::optional<double> theta, const std::string& dist, const std::string& dict) {
  ExperimentConfig cfg = load(c);
  Cell cell{cfg.n_values.front(), cfg.p_values.front(), cfg.theta_values.front(), cfg.dists.front()};
  if (n) cell.n = *n;
  if (p) cell.p = *p;
  if (theta) cell.theta = *theta;
  if (!dist.empty()) cell.dist = parse_distribution(dist);
  if (!dict.empty()) cfg.dictionary = parse_dict_kind(dict);
  validate(ModelParams{cell.n, cell.p, cell.theta, cell.dist, 0});
  if (auto w = model_warning(cell.dist)) std::cerr << "warning: " << *w << '\n';

  const TrialData d = make_trial_data(cfg, cell, 0);
  const fs::path dir = out_dir(c.out);
  save_matrix((dir / "A.txt").string(), d.a.a);
  save_matrix((dir / "X.txt").string(), d.x.x);
  save_matrix((dir / "Y.txt").string(), d.y);
  std::ostringstream meta;
  meta << "n " << cell.n << "\np " << cell.p << "\ntheta " << format_double(cell.theta) << "\ndist "
       << to_string(cell.dist) << "\ndictionary " << to_string(cfg.dictionary) << "\nseed " << cfg.require_seed()
       << "\ntrial_seed " << d.params.seed << "\ngaussian_sampler " << Rng::kGaussianSampler << '\n';
  write_text(dir / "meta.txt", meta.str());
  return kOk;
}

int cmd_recover(const Common& c, const std::string& y_path, const std::string& a_path,
                const std::string& x_path) {
  ExperimentConfig cfg = load(c);
  const Matrix y = load_matrix(y_path);
  const std::size_t n = y.rows();

  SpudOptions opts;
  opts.solver = cfg.solver;
  opts.zero_tol = cfg.zero_tol;
  opts.rank_tol = cfg.rank_tol;
  opts.dedup = cfg.dedup;
  const Variant variant = cfg.variants.front();
  if (variant == Variant::AllPairs && !c.force && y.cols() * (y.cols() - 1) / 2 > kMaxPairsWithoutForce) {
    throw GuardrailError("all-pairs on " + std::to_string(y.cols()) + " columns; use --force or --variant dc");
  }
  const CandidateSet cs = variant == Variant::DC ? er_spud_dc(y, named_seed(cfg.require_seed(), "pairing"), opts)
                                                 : er_spud_all_pairs(y, opts);
  const RecoveryResult res = greedy_select(cs.candidates, y, n, opts);

  const fs::path dir = out_dir(c.out);
  {
    std::ofstream os(dir / "candidates.txt");
    write_candidates(os, cs.candidates);
    if (!os) throw IoError("cannot write candidates");
  }
  save_matrix((dir / "X_hat.txt").string(), res.x_hat);
  if (res.status == RecoveryStatus::Complete) save_matrix((dir / "A_hat.txt").string(), res.a_hat);

  std::ostringstream rep;
  rep << "status " << to_string(res.status) << "\nvariant " << to_string(variant) << "\ncandidates "
      << cs.candidates.size() << "\nproduced " << cs.produced << "\nskipped " << cs.skipped << "\nlp_failures "
      << cs.lp_failures << "\nlp_pivots " << cs.lp_pivots << "\nselected";
  for (auto k : res.selected) rep << ' ' << k;
  rep << '\n';
  if (!x_path.empty()) {
    const Matrix x = load_matrix(x_path);
    rep << "rows_recovered " << match_rows(cs.candidates, x, cfg.match_tol).rows_recovered << '\n';
  }
  if (!a_path.empty()) {
    const Matrix a = load_matrix(a_path);
    const double err = res.status == RecoveryStatus::Complete ? dictionary_error(a, res.a_hat) : -1.0;
    rep << "a_error " << format_double(err) << '\n';
  }
  write_text(dir / "result.txt", rep.str());
  std::cout << rep.str();
  return kOk;
}

int cmd_sweep(const Common& c) {
  ExperimentConfig cfg = load(c);
  if (!c.out.empty()) cfg.csv = c.out;
  const auto records = phase_sweep(cfg, {c.force, true});
  std::cerr << records.size() << " rows in " << cfg.csv << '\n';
  return kOk;
}

int cmd_bounds(const Common& c) {
  ExperimentConfig cfg = load(c);
  if (!c.out.empty()) cfg.csv = c.out;
  bounds_batch(cfg);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse dictionary recovery by l1 subproblems over column pairs"};
  app.require_subcommand(1);

  Common gen_c, rec_c, sweep_c, bounds_c;
  std::optional<std::size_t> gen_n, gen_p;
  std::optional<double> gen_theta;
  std::string gen_dist, gen_dict, y_path, a_path, x_path;

  auto* gen = app.add_subcommand("gen", "sample A, X and Y = A X");
  add_common(gen, gen_c);
  gen->add_option("--n", gen_n);
  gen->add_option("--p", gen_p);
  gen->add_option("--theta", gen_theta);
  gen->add_option("--dist", gen_dist, "gaussian | rademacher | uniform:<a>");
  gen->add_option("--dictionary", gen_dict, "gaussian | orthogonal | identity");

  auto* rec = app.add_subcommand("recover", "recover A and X from Y");
  add_common(rec, rec_c);
  rec->add_option("--y", y_path, "observed Y")->required();
  rec->add_option("--a", a_path, "true A, for the dictionary error");
  rec->add_option("--x", x_path, "true X, for row matching");

  auto* sweep = app.add_subcommand("sweep", "phase sweep over the (n, p, theta) grid");
  add_common(sweep, sweep_c);

  auto* bounds = app.add_subcommand("bounds", "lemma and concentration checks");
  add_common(bounds, bounds_c);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(gen_c, gen_n, gen_p, gen_theta, gen_dist, gen_dict);
    if (*rec) return cmd_recover(rec_c, y_path, a_path, x_path);
    if (*sweep) return cmd_sweep(sweep_c);
    if (*bounds) return cmd_bounds(bounds_c);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const GuardrailError& e) {
    std::cerr << "refused: " << e.what() << '\n';
    return kGuardrail;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  }
  return kOk;
}
