#include "spud/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include <omp.h>

#include "spud/analysis.hpp"
#include "spud/rng.hpp"

namespace spud {

const char* const kTrialCsvHeader =
    "variant,n,p,theta,dist,seed,trial,rows_recovered,full_recovery,a_error,candidates,skipped,"
    "lp_pivots_total,ms_gen,ms_lp,ms_greedy";

const char* const kBoundsCsvHeader = "check,n,p,theta,dist,instance,value,bound,margin,pass";

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string cell_key(const Cell& c) {
  return "n=" + std::to_string(c.n) + ";p=" + std::to_string(c.p) + ";theta=" + format_double(c.theta) +
         ";dist=" + to_string(c.dist);
}

std::uint64_t trial_seed(std::uint64_t seed, const Cell& cell, std::size_t trial) {
  return substream_seed(named_seed(seed, cell_key(cell)), trial);
}

std::vector<Cell> grid_cells(const ExperimentConfig& cfg) {
  std::vector<Cell> cells;
  for (auto n : cfg.n_values)
    for (auto p : cfg.p_values)
      for (double t : cfg.theta_values)
        for (const auto& d : cfg.dists) cells.push_back({n, p, t, d});
  return cells;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream is(line);
  while (std::getline(is, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

template <class T>
T parse_field(const std::string& s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw IoError("bad CSV field '" + s + "'");
  return v;
}

using CellId = std::tuple<std::string, std::size_t, std::size_t, double, std::string, std::uint64_t>;

CellId cell_id(const TrialRecord& r) {
  return {std::string(to_string(r.variant)), r.n, r.p, r.theta, r.dist, r.seed};
}

bool record_less(const TrialRecord& a, const TrialRecord& b) {
  return std::tuple_cat(cell_id(a), std::tuple(a.trial)) < std::tuple_cat(cell_id(b), std::tuple(b.trial));
}

void write_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write '" + path + "'");
    os << content;
    os.flush();
    if (!os) throw IoError("write failed for '" + path + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw IoError("cannot replace '" + path + "'");
  }
}

std::vector<TrialRecord> read_existing(const std::string& path) {
  std::vector<TrialRecord> out;
  std::ifstream is(path);
  if (!is) return out;
  std::string line;
  if (!std::getline(is, line)) return out;
  if (line != kTrialCsvHeader) throw IoError("'" + path + "' exists with a different header");
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(parse_record(line));
  return out;
}

std::string summary_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream os;
  os << "variant,n,p,theta,dist,seed,trials,full_recoveries,success_rate,mean_rows_recovered\n";
  std::size_t a = 0;
  while (a < records.size()) {
    std::size_t b = a;
    std::size_t ok = 0, rows = 0;
    while (b < records.size() && cell_id(records[b]) == cell_id(records[a])) {
      ok += records[b].full_recovery;
      rows += records[b].rows_recovered;
      ++b;
    }
    const auto& r = records[a];
    const double cnt = static_cast<double>(b - a);
    os << to_string(r.variant) << ',' << r.n << ',' << r.p << ',' << format_double(r.theta) << ',' << r.dist
       << ',' << r.seed << ',' << (b - a) << ',' << ok << ',' << format_double(ok / cnt) << ','
       << format_double(rows / cnt) << '\n';
    a = b;
  }
  return os.str();
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

TrialData make_trial_data(const ExperimentConfig& cfg, const Cell& cell, std::size_t trial) {
  if (cfg.dictionary == DictKind::UserSupplied) throw ConfigError("sweeps need a sampled dictionary");
  const std::uint64_t ts = trial_seed(cfg.require_seed(), cell, trial);
  TrialData d;
  d.params = {cell.n, cell.p, cell.theta, cell.dist, ts};
  d.a = sample_dictionary(cell.n, cfg.dictionary, ts);
  d.x = sample_coefficients(d.params);
  d.y = synthesize(d.a, d.x);
  return d;
}

double dictionary_error(const Matrix& a, const Matrix& a_hat) {
  const std::size_t n = a.rows();
  if (a.cols() != n || a_hat.rows() != n || a_hat.cols() != n) throw DimensionError("dictionary shapes differ");
  Vector na(n), nh(n);
  for (std::size_t j = 0; j < n; ++j) {
    const Vector ca = a.col(j), ch = a_hat.col(j);
    na[j] = norm2(ca);
    nh[j] = norm2(ch);
  }
  // Greedy assignment on |normalized correlation|.
  std::vector<std::tuple<double, std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double c = 0.0;
      for (std::size_t k = 0; k < n; ++k) c += a(k, i) * a_hat(k, j);
      const double den = na[i] * nh[j];
      pairs.emplace_back(den > 0.0 ? -std::abs(c) / den : 0.0, i, j);
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<char> used_a(n, 0), used_h(n, 0);
  double err = 0.0, total = 0.0;
  for (const auto& [neg, i, j] : pairs) {
    if (used_a[i] || used_h[j]) continue;
    used_a[i] = used_h[j] = 1;
    double c = 0.0;
    for (std::size_t k = 0; k < n; ++k) c += a(k, i) * a_hat(k, j);
    const double scale = nh[j] > 0.0 ? c / (nh[j] * nh[j]) : 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double d = a(k, i) - scale * a_hat(k, j);
      err += d * d;
    }
  }
  for (double v : a.data()) total += v * v;
  return total > 0.0 ? std::sqrt(err / total) : std::sqrt(err);
}

TrialRecord run_trial(const ExperimentConfig& cfg, const Cell& cell, Variant variant, std::size_t trial) {
  TrialRecord rec;
  rec.variant = variant;
  rec.n = cell.n;
  rec.p = cell.p;
  rec.theta = cell.theta;
  rec.dist = to_string(cell.dist);
  rec.seed = cfg.require_seed();
  rec.trial = trial;

  auto t0 = Clock::now();
  const TrialData data = make_trial_data(cfg, cell, trial);
  rec.ms_gen = ms_since(t0);
  rec.y_max = max_abs(data.y);

  SpudOptions opts;
  opts.solver = cfg.solver;
  opts.zero_tol = cfg.zero_tol;
  opts.rank_tol = cfg.rank_tol;
  opts.dedup = cfg.dedup;

  t0 = Clock::now();
  const CandidateSet cs = variant == Variant::DC
                              ? er_spud_dc(data.y, named_seed(trial_seed(rec.seed, cell, trial), "pairing"), opts)
                              : er_spud_all_pairs(data.y, opts);
  rec.ms_lp = ms_since(t0);
  rec.candidates = cs.produced;
  rec.skipped = cs.skipped;
  rec.lp_pivots_total = cs.lp_pivots;

  t0 = Clock::now();
  const MatchReport mr = match_rows(cs.candidates, data.x.x, cfg.match_tol);
  rec.rows_recovered = mr.rows_recovered;
  const RecoveryResult res = greedy_select(cs.candidates, data.y, cell.n, opts);
  rec.status = res.status;
  if (res.status == RecoveryStatus::Complete) {
    const Matrix recon = matmul(res.a_hat, res.x_hat);
    double worst = 0.0;
    for (std::size_t k = 0; k < recon.data().size(); ++k)
      worst = std::max(worst, std::abs(recon.data()[k] - data.y.data()[k]));
    rec.recon_residual = worst;
    rec.a_error = dictionary_error(data.a.a, res.a_hat);
  }
  rec.ms_greedy = ms_since(t0);
  rec.full_recovery = rec.rows_recovered == cell.n && res.status == RecoveryStatus::Complete;

  if (!cfg.timings) rec.ms_gen = rec.ms_lp = rec.ms_greedy = 0.0;
  return rec;
}

std::string format_record(const TrialRecord& r) {
  std::ostringstream os;
  os << to_string(r.variant) << ',' << r.n << ',' << r.p << ',' << format_double(r.theta) << ',' << r.dist << ','
     << r.seed << ',' << r.trial << ',' << r.rows_recovered << ',' << (r.full_recovery ? 1 : 0) << ','
     << format_double(r.a_error) << ',' << r.candidates << ',' << r.skipped << ',' << r.lp_pivots_total << ','
     << format_double(r.ms_gen) << ',' << format_double(r.ms_lp) << ',' << format_double(r.ms_greedy);
  return os.str();
}

TrialRecord parse_record(const std::string& line) {
  const auto f = split_csv(line);
  if (f.size() != 16) throw IoError("CSV row has " + std::to_string(f.size()) + " fields, expected 16");
  TrialRecord r;
  try {
    r.variant = parse_variant(f[0]);
    r.dist = to_string(parse_distribution(f[4]));
  } catch (const std::invalid_argument& e) {
    throw IoError(e.what());
  }
  r.n = parse_field<std::size_t>(f[1]);
  r.p = parse_field<std::size_t>(f[2]);
  r.theta = parse_field<double>(f[3]);
  r.seed = parse_field<std::uint64_t>(f[5]);
  r.trial = parse_field<std::size_t>(f[6]);
  r.rows_recovered = parse_field<std::size_t>(f[7]);
  r.full_recovery = parse_field<int>(f[8]) != 0;
  r.a_error = parse_field<double>(f[9]);
  r.candidates = parse_field<std::size_t>(f[10]);
  r.skipped = parse_field<std::size_t>(f[11]);
  r.lp_pivots_total = parse_field<long>(f[12]);
  r.ms_gen = parse_field<double>(f[13]);
  r.ms_lp = parse_field<double>(f[14]);
  r.ms_greedy = parse_field<double>(f[15]);
  r.status = r.a_error >= 0.0 ? RecoveryStatus::Complete : RecoveryStatus::RankDeficient;
  return r;
}

void check_guardrail(const ExperimentConfig& cfg, bool force) {
  if (force) return;
  if (std::find(cfg.variants.begin(), cfg.variants.end(), Variant::AllPairs) == cfg.variants.end()) return;
  for (auto p : cfg.p_values) {
    const std::size_t pairs = p * (p - 1) / 2;
    if (pairs > kMaxPairsWithoutForce) {
      throw GuardrailError("all-pairs at p = " + std::to_string(p) + " needs " + std::to_string(pairs) +
                           " LPs (limit " + std::to_string(kMaxPairsWithoutForce) +
                           "); use --force or the dc variant");
    }
  }
}

std::vector<TrialRecord> phase_sweep(const ExperimentConfig& cfg, const SweepOptions& opts) {
  const std::uint64_t seed = cfg.require_seed();
  check_guardrail(cfg, opts.force);

  std::map<CellId, std::vector<TrialRecord>> existing;
  for (auto& r : read_existing(cfg.csv)) existing[cell_id(r)].push_back(std::move(r));

  std::vector<TrialRecord> records;
  std::set<CellId> kept;
  for (auto& [id, rows] : existing) {
    std::set<std::size_t> trials;
    for (const auto& r : rows) trials.insert(r.trial);
    bool complete = trials.size() == rows.size();
    for (std::size_t t = 0; complete && t < cfg.trials; ++t) complete = trials.count(t) != 0;
    if (!complete) continue;
    kept.insert(id);
    records.insert(records.end(), rows.begin(), rows.end());
  }

  struct Job {
    Cell cell;
    Variant variant;
    std::size_t trial;
  };
  std::vector<Job> jobs;
  for (Variant v : cfg.variants) {
    for (const auto& cell : grid_cells(cfg)) {
      const CellId id{std::string(to_string(v)), cell.n, cell.p, cell.theta, to_string(cell.dist), seed};
      if (kept.count(id)) {
        if (opts.progress) std::cerr << "skip " << to_string(v) << ' ' << cell_key(cell) << " (present)\n";
        continue;
      }
      for (std::size_t t = 0; t < cfg.trials; ++t) jobs.push_back({cell, v, t});
    }
  }

  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
  // Many small jobs: one trial per thread. Few large ones: let each trial use
  // the parallel kernels instead.
  const bool outer = jobs.size() >= static_cast<std::size_t>(omp_get_max_threads()) && omp_get_max_threads() > 1;
  std::vector<TrialRecord> fresh(jobs.size());
  std::size_t done = 0;
#pragma omp parallel for schedule(dynamic, 1) if (outer)
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    fresh[k] = run_trial(cfg, jobs[k].cell, jobs[k].variant, jobs[k].trial);
    if (opts.progress) {
#pragma omp critical(sweep_progress)
      {
        ++done;
        std::cerr << '[' << done << '/' << jobs.size() << "] " << to_string(jobs[k].variant) << ' '
                  << cell_key(jobs[k].cell) << " trial " << jobs[k].trial << " rows "
                  << fresh[k].rows_recovered << '/' << fresh[k].n << '\n';
      }
    }
  }
  records.insert(records.end(), fresh.begin(), fresh.end());
  std::sort(records.begin(), records.end(), record_less);

  std::string body = std::string(kTrialCsvHeader) + '\n';
  for (const auto& r : records) body += format_record(r) + '\n';
  write_atomic(cfg.csv, body);
  write_atomic(cfg.summary_path(), summary_csv(records));
  return records;
}

void bounds_batch(const ExperimentConfig& cfg, bool progress) {
  const std::uint64_t seed = cfg.require_seed();
  if (cfg.threads > 0) omp_set_num_threads(cfg.threads);
  const auto& b = cfg.bounds;
  auto wants = [&](const char* name) {
    return std::find(b.checks.begin(), b.checks.end(), name) != b.checks.end();
  };

  std::ostringstream os;
  os << kBoundsCsvHeader << '\n';
  auto row = [&](const char* check, std::size_t n, std::size_t p, double theta, const std::string& dist,
                 std::size_t instance, double value, double bound, double margin, bool pass) {
    os << check << ',' << n << ',' << p << ',' << format_double(theta) << ',' << dist << ',' << instance << ','
       << format_double(value) << ',' << format_double(bound) << ',' << format_double(margin) << ','
       << (pass ? 1 : 0) << '\n';
  };

  for (const auto& cell : grid_cells(cfg)) {
    const std::uint64_t cs = named_seed(seed, "bounds;" + cell_key(cell));
    const std::string dist = to_string(cell.dist);
    if (progress) std::cerr << "bounds " << cell_key(cell) << '\n';

    if (wants("w")) {
      WOptions wo{b.w_method, b.w_trials, b.w_search_steps, b.w_mc_samples};
      const WEstimate est = estimate_W({cell.n, cell.p, cell.theta, cell.dist, named_seed(cs, "w")}, wo);
      // No numeric bound: the rate has unknown constants.
      for (std::size_t t = 0; t < est.values.size(); ++t)
        row("w", cell.n, cell.p, cell.theta, dist, t, est.values[t], 0.0, 0.0, true);
    }

    if (wants("marginal")) {
      std::vector<Vector> dirs;
      Rng rng(named_seed(cs, "marginal-directions"));
      for (std::size_t t = 0; t < b.directions; ++t) {
        Vector v(cell.n);
        for (double& e : v) e = rng.normal();
        dirs.push_back(std::move(v));
      }
      for (std::size_t i = 0; i < cell.n; ++i) {
        for (double sgn : {1.0, -1.0}) {
          Vector v(cell.n, 0.0);
          v[i] = sgn;
          dirs.push_back(std::move(v));
        }
      }
      std::vector<MarginalReport> reps(dirs.size());
#pragma omp parallel for schedule(dynamic, 1)
      for (std::size_t k = 0; k < dirs.size(); ++k) {
        reps[k] = check_marginal_lower_bound(cell.dist, cell.theta, cell.n, dirs[k], b.mc_samples,
                                             substream_seed(named_seed(cs, "marginal"), k));
      }
      for (std::size_t k = 0; k < reps.size(); ++k)
        row("marginal", cell.n, cell.p, cell.theta, dist, k, reps[k].lhs, reps[k].rhs,
            reps[k].lhs - reps[k].rhs + 3.0 * reps[k].std_err, reps[k].pass);
    }

    if (wants("partition")) {
      const std::size_t size = b.partition_subset > 0 ? b.partition_subset : (cell.p - 1) / 4;
      if (4 * size >= cell.p) throw ConfigError("partition_subset must be below p/4");
      for (std::size_t t = 0; t < b.partition_trials; ++t) {
        const std::uint64_t ts = substream_seed(named_seed(cs, "partition"), t);
        const auto x = sample_coefficients({cell.n, cell.p, cell.theta, cell.dist, ts});
        const auto subset = random_subset(cell.p, size, ts);
        const PartitionReport rep = check_partition_inequality(x, subset, b.directions, ts);
        row("partition", cell.n, cell.p, cell.theta, dist, t, rep.worst_margin, 0.0, rep.worst_margin,
            rep.all_pass());
      }
    }
  }

  if (wants("restricted")) {
    for (const auto& d : cfg.dists) {
      const std::string dist = to_string(d);
      if (progress) std::cerr << "bounds restricted dist=" << dist << '\n';
      const std::uint64_t rs = named_seed(seed, "bounds;restricted;dist=" + dist);
      std::vector<RestrictedReport> reps(b.restricted_instances);
#pragma omp parallel for schedule(dynamic, 1)
      for (std::size_t k = 0; k < reps.size(); ++k) {
        const auto inst = sample_restricted_instance(b.restricted_s, b.restricted_p, b.restricted_theta, d,
                                                     b.gamma, substream_seed(rs, k));
        reps[k] = check_restricted_one_sparse(inst.xj, inst.b, b.gamma, cfg.solver);
      }
      for (std::size_t k = 0; k < reps.size(); ++k) {
        const double supp = static_cast<double>(reps[k].support.size());
        row("restricted", b.restricted_s, b.restricted_p, b.restricted_theta, dist, k, supp, 1.0, 1.0 - supp,
            reps[k].pass);
      }
    }
  }

  write_atomic(cfg.csv, os.str());
}

}  // namespace spud
