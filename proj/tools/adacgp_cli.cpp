#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "adacgp/benchmark.hpp"
#include "adacgp/experiment.hpp"
#include "adacgp/graph_models.hpp"
#include "adacgp/logging.hpp"
#include "adacgp/metrics.hpp"

namespace fs = std::filesystem;
using namespace adacgp;

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::string topology;
  std::string variant;
  std::string mask;
  long long seed = -1;
  int workers = -1;
};

void add_common(CLI::App* app, Common& c, bool with_variant) {
  app->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  app->add_option("--seed", c.seed, "run a single seed (overrides runs.seeds)");
  app->add_option("--out", c.out, "output directory")->capture_default_str();
  app->add_option("--topology", c.topology, "random | erdos-renyi | k-regular | sbm | external");
  if (with_variant) {
    app->add_option("--variant", c.variant, "p1-debias | p1-alt-debias | p2-debias | p2-alt-debias");
    app->add_option("--mask", c.mask, "N x N 0/1 CSV of allowed edges")->check(CLI::ExistingFile);
  }
  app->add_option("--workers", c.workers, "worker threads (0 = all cores)");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_experiment_config(c.config);
  if (!c.topology.empty()) cfg.topology = parse_topology(c.topology);
  if (!c.variant.empty()) cfg.variants = {c.variant};
  if (c.seed >= 0) cfg.seeds = {static_cast<Seed>(c.seed)};
  if (c.workers >= 0) cfg.workers = static_cast<unsigned>(c.workers);
  if (!c.mask.empty()) {
    std::ifstream is(c.mask);
    cfg.estimator.mask = read_mask_csv(is, c.mask);
  }
  cfg.validate();
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw ParameterError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

int cmd_simulate(const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  fs::create_directories(c.out);
  json index = json::array();
  for (Seed s : cfg.seeds) {
    const SyntheticProblem p = make_problem(cfg, s);
    const std::string tag = "seed" + std::to_string(s);
    write_gso_csv((fs::path(c.out) / ("gso_true_" + tag + ".csv")).string(), p.w);
    std::ofstream os(fs::path(c.out) / ("stream_" + tag + ".csv"));
    write_stream_csv(os, p.stream, "n=" + std::to_string(p.stream.n()) + " T=" + std::to_string(p.stream.length()));
    index.push_back({{"seed", s},
                     {"gso", "gso_true_" + tag + ".csv"},
                     {"stream", "stream_" + tag + ".csv"},
                     {"coefficients", std::vector<double>(p.h.values.data(), p.h.values.data() + p.h.values.size())},
                     {"spectral_radius", spectral_radius(p.w)},
                     {"edges", count_edges(p.w)}});
  }
  write_json(fs::path(c.out) / "results.json", {{"simulated", index}, {"config", to_json(cfg)}});
  std::cout << "wrote " << cfg.seeds.size() << " stream(s) to " << c.out << '\n';
  return 0;
}

int cmd_estimate(const Common& c, const std::string& stream_path, const std::string& truth_path, bool normalize) {
  ExperimentConfig cfg = resolve(c);
  if (stream_path.empty()) {
    const ResultSet rs = run_experiment(cfg, {c.out});
    for (const auto& a : rs.aggregate)
      std::cout << a.algorithm << ": NMSE(W) " << a.nmse_w_mean << " +- " << a.nmse_w_std << ", P_M " << a.p_miss_mean
                << ", P_FA " << a.p_fa_mean << ", NMSE(x_h) " << a.nmse_x_h_mean << " (" << a.runs << " ok, "
                << a.failures << " failed)\n";
    return std::all_of(rs.aggregate.begin(), rs.aggregate.end(), [](const AggregateRow& a) { return a.runs > 0; }) ? 0
                                                                                                                   : 3;
  }

  IngestResult data = ingest_stream(stream_path, c.mask, normalize);
  EstimatorConfig e = cfg.estimator;
  parse_variant(cfg.variants.front(), e.path, e.debias_mode);
  if (data.mask) e.mask = data.mask;
  RunOptions opts;
  opts.edge_tol = cfg.edge_tol;
  opts.keep_snapshots = cfg.write_snapshots;
  opts.snapshot_stride = cfg.snapshot_stride;
  if (!truth_path.empty()) opts.truth = read_gso_csv(truth_path);
  fs::create_directories(c.out);
  const EstimatorTrace tr = run_adacgp(data.stream, e, opts);
  for (const auto& s : tr.snapshots)
    write_gso_csv((fs::path(c.out) / ("gso_t" + std::to_string(s.step) + ".csv")).string(), s.w);
  write_gso_csv((fs::path(c.out) / "gso_final.csv").string(), tr.final_w);
  {
    std::ofstream os(fs::path(c.out) / "trace.jsonl");
    write_trace_jsonl(os, tr, cfg.write_snapshots ? std::function<std::string(long)>([](long step) {
      return "gso_t" + std::to_string(step) + ".csv";
    })
                                                  : std::function<std::string(long)>());
  }
  json res = {{"variant", cfg.variants.front()},
              {"stream", stream_path},
              {"n", data.stream.n()},
              {"steps", tr.length()},
              {"debias_onset", tr.debias_onset},
              {"terminated_at", tr.terminated_at},
              {"nmse_x_psi", tail_mean(tr.nmse_psi, cfg.steady_window)},
              {"nmse_x_h", tail_mean(tr.nmse_h, cfg.steady_window)},
              {"edges", count_edges(tr.final_w, cfg.edge_tol)},
              {"constant_channels", data.constant_channels},
              {"estimator", estimator_to_json(e)}};
  if (opts.truth) {
    const auto rep = classify_edges(*opts.truth, tr.final_w, cfg.edge_tol);
    res["nmse_W"] = tail_mean(tr.nmse_w, cfg.steady_window);
    res["p_miss"] = rep.p_miss;
    res["p_false_alarm"] = rep.p_false_alarm;
    res["f1"] = rep.f1;
  }
  write_json(fs::path(c.out) / "results.json", res);
  std::cout << "processed " << tr.length() << " samples; results in " << c.out << '\n';
  return 0;
}

int cmd_search(const Common& c, int trials) {
  ExperimentConfig cfg = resolve(c);
  if (c.seed >= 0) cfg.search_seed = static_cast<Seed>(c.seed);
  if (trials > 0) cfg.trials = trials;
  if (cfg.search_mode == "sweep") {
    const SweepResult r = sparsity_sweep(cfg);
    json j = r.to_json();
    j["config"] = to_json(cfg);
    write_json(fs::path(c.out) / "results.json", j);
    for (const auto& s : r.summary)
      std::cout << s.variant << ": best mu_1 " << s.best_mu1 << ", edges " << s.median_nnz << " (true "
                << s.median_true << ")\n";
    return 0;
  }
  try {
    const SearchResult r = hyperparameter_search(cfg, cfg.trials, cfg.search_seed);
    json j = to_json(r);
    j["config"] = to_json(cfg);
    write_json(fs::path(c.out) / "results.json", j);
    std::cout << "best NMSE(x_h) " << r.leaderboard.front().objective << " over " << cfg.trials << " trials\n";
    return 0;
  } catch (const SearchFailed& e) {
    write_json(fs::path(c.out) / "results.json", to_json(SearchResult{cfg.estimator, e.leaderboard}));
    throw;
  }
}

int cmd_bench(const Common& c, std::vector<int> sizes, int reps) {
  ExperimentConfig cfg = resolve(c);
  if (!sizes.empty()) cfg.bench_sizes = sizes;
  if (reps > 0) cfg.bench_reps = reps;
  const Seed seed = c.seed >= 0 ? static_cast<Seed>(c.seed) : 1;
  const ScalingReport r = benchmark_complexity(cfg.bench_sizes, cfg.bench_reps, cfg.bench_min_seconds, seed);
  fs::create_directories(c.out);
  std::ofstream os(fs::path(c.out) / "scaling.csv");
  write_scaling_csv(os, r);
  json ex;
  for (std::size_t a = 0; a < r.algorithms.size(); ++a) {
    ex[r.algorithms[a]] = std::isfinite(r.exponents[a]) ? json(r.exponents[a]) : json(nullptr);
    std::cout << r.algorithms[a] << ": exponent " << r.exponents[a] << '\n';
  }
  write_json(fs::path(c.out) / "results.json", {{"exponents", ex}, {"sizes", cfg.bench_sizes}, {"reps", cfg.bench_reps}});
  return 0;
}

int cmd_metrics(const std::string& truth, const std::string& estimate, double tol,
                const std::vector<std::string>& snapshots, long lag, const std::string& out) {
  json res;
  if (!estimate.empty()) {
    const Matrix w = read_gso_csv(estimate);
    const Vector deg = out_in_degree(w);
    res["out_in_degree"] = std::vector<double>(deg.data(), deg.data() + deg.size());
    res["edges"] = count_edges(w, tol);
    if (!truth.empty()) {
      const Matrix t = read_gso_csv(truth);
      const auto r = classify_edges(t, w, tol);
      res["nmse_W"] = nmse_gso(t, w);
      res.update({{"precision", r.precision},
                  {"recall", r.recall},
                  {"f1", r.f1},
                  {"p_miss", r.p_miss},
                  {"p_false_alarm", r.p_false_alarm},
                  {"true_nnz", r.true_nnz},
                  {"est_nnz", r.est_nnz}});
    }
  }
  if (!snapshots.empty()) {
    std::vector<Matrix> mats;
    for (const auto& s : snapshots) mats.push_back(read_gso_csv(s));
    const auto d = gso_lag_stability(mats, lag);
    res["lag"] = lag;
    res["lag_differences"] = d;
    res["lag_difference_median"] = median(d);
  }
  if (res.empty()) throw ParameterError("metrics: give --estimate and/or --snapshots");
  std::cout << res.dump(2) << '\n';
  if (!out.empty()) write_json(fs::path(out) / "results.json", res);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online graph topology estimation from streaming signals"};
  app.require_subcommand(1);
  std::string level = "warning";
  app.add_option("--log-level", level, "debug | info | warning | error")->capture_default_str();

  Common sim, est, srch, bench;
  auto* s = app.add_subcommand("simulate", "generate graphs and signal streams");
  add_common(s, sim, false);

  auto* e = app.add_subcommand("estimate", "run estimators (synthetic Monte Carlo, or an external --stream)");
  add_common(e, est, true);
  std::string stream, truth;
  bool raw = false;
  e->add_option("--stream", stream, "CSV stream, one row per time step")->check(CLI::ExistingFile);
  e->add_option("--truth", truth, "ground-truth GSO CSV for an external stream")->check(CLI::ExistingFile);
  e->add_flag("--no-normalize", raw, "keep the external stream as is");

  auto* h = app.add_subcommand("search", "random hyper-parameter search or sparsity sweep");
  add_common(h, srch, true);
  int trials = 0;
  h->add_option("--trials", trials, "number of random trials");

  auto* b = app.add_subcommand("bench", "per-iteration time scaling");
  add_common(b, bench, false);
  std::vector<int> sizes;
  int reps = 0;
  b->add_option("--sizes", sizes, "node counts, ascending");
  b->add_option("--reps", reps, "timed repetitions per size");

  auto* m = app.add_subcommand("metrics", "evaluate GSO files");
  std::string m_truth, m_est, m_out;
  std::vector<std::string> snaps;
  double tol = 0.0;
  long lag = 1;
  m->add_option("--truth", m_truth, "ground-truth GSO CSV")->check(CLI::ExistingFile);
  m->add_option("--estimate", m_est, "estimated GSO CSV")->check(CLI::ExistingFile);
  m->add_option("--tol", tol, "edge magnitude threshold")->capture_default_str();
  m->add_option("--snapshots", snaps, "ordered GSO snapshot CSVs")->check(CLI::ExistingFile);
  m->add_option("--lag", lag, "snapshot lag")->capture_default_str();
  m->add_option("--out", m_out, "also write results.json here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (level == "debug") log::set_level(log::Level::Debug);
    else if (level == "info") log::set_level(log::Level::Info);
    else if (level == "warning") log::set_level(log::Level::Warning);
    else if (level == "error") log::set_level(log::Level::Error);
    else throw ParameterError("unknown log level '" + level + "'");

    if (*s) return cmd_simulate(sim);
    if (*e) return cmd_estimate(est, stream, truth, !raw);
    if (*h) return cmd_search(srch, trials);
    if (*b) return cmd_bench(bench, sizes, reps);
    if (*m) return cmd_metrics(m_truth, m_est, tol, snaps, lag, m_out);
  } catch (const ParseError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  } catch (const ParameterError& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 2;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
