#include "adacgp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "adacgp/csv_io.hpp"
#include "adacgp/logging.hpp"
#include "adacgp/metrics.hpp"

namespace adacgp {
namespace {

namespace fs = std::filesystem;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require(bool ok, const std::string& msg) {
  if (!ok) throw ParameterError(msg);
}

// Runs body(i) for i in [0, count) on up to `workers` threads. Each index
// is processed exactly once; callers write into pre-sized slots.
void parallel_for(std::size_t count, unsigned workers, const std::function<void(std::size_t)>& body) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = next++; i < count; i = next++) body(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// Rejects keys outside `allowed` so that typos in config files surface.
void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
  require(j.is_object(), "config: section '" + section + "' must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    require(ok.count(it.key()) > 0, "config: unknown key '" + it.key() + "' in section '" + section + "'");
}

template <class T>
void get_if(const json& j, const char* key, T& out) {
  if (!j.contains(key) || j.at(key).is_null()) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParameterError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

std::string first_lag_name(FirstLag f) { return f == FirstLag::Identifiable ? "identifiable" : "sampled"; }

FirstLag parse_first_lag(const std::string& s) {
  if (s == "identifiable") return FirstLag::Identifiable;
  if (s == "sampled") return FirstLag::Sampled;
  throw ParameterError("config: first_lag must be identifiable or sampled, got '" + s + "'");
}

VarGradient parse_var_gradient(const std::string& s) {
  if (s == "instantaneous") return VarGradient::Instantaneous;
  if (s == "recursive") return VarGradient::Recursive;
  throw ParameterError("config: baseline gradient must be instantaneous or recursive, got '" + s + "'");
}

std::string var_gradient_name(VarGradient g) { return g == VarGradient::Instantaneous ? "instantaneous" : "recursive"; }

void read_step(const json& j, const char* key, StepRule& r) {
  if (!j.contains(key)) return;
  const json& s = j.at(key);
  check_keys(s, std::string("estimator.steps.") + key, {"rule", "value"});
  std::string rule = to_string(r.mode);
  get_if(s, "rule", rule);
  r.mode = parse_step_mode(rule);
  get_if(s, "value", r.value);
}

void read_detector(const json& j, const char* key, DetectorParams& d) {
  if (!j.contains(key)) return;
  const json& s = j.at(key);
  check_keys(s, std::string("estimator.detector.") + key, {"alpha", "patience", "threshold"});
  get_if(s, "alpha", d.alpha);
  get_if(s, "patience", d.patience);
  get_if(s, "threshold", d.rel_improvement);
}

json step_json(const StepRule& r) { return {{"rule", to_string(r.mode)}, {"value", r.value}}; }

json detector_json(const DetectorParams& d) {
  return {{"alpha", d.alpha}, {"patience", d.patience}, {"threshold", d.rel_improvement}};
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

EstimatorConfig with_variant(const EstimatorConfig& base, const std::string& variant) {
  EstimatorConfig e = base;
  parse_variant(variant, e.path, e.debias_mode);
  return e;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path);
  if (!os) throw ParameterError("cannot write " + path.string());
  os << text;
  if (!os) throw ParameterError("write failed: " + path.string());
}

}  // namespace

void ExperimentConfig::validate() const {
  require(!name.empty(), "config: name must not be empty");
  require(n >= 1, "config: n must be >= 1");
  require(topology != Topology::External || !gso_file.empty(), "config: external topology needs data.gso_file");
  require(T >= 1, "config: T must be >= 1");
  require(burn_in >= 0, "config: burn_in must be >= 0");
  require(!variants.empty(), "config: at least one variant is required");
  for (const auto& v : variants) {
    Path p;
    DebiasMode m;
    parse_variant(v, p, m);
  }
  require(!seeds.empty(), "config: at least one seed is required");
  require(steady_window >= 1, "config: steady_window must be >= 1");
  require(edge_tol >= 0.0, "config: edge_tol must be >= 0");
  require(snapshot_stride >= 1, "config: snapshot_stride must be >= 1");
  require(baseline_sparsity >= 0.0, "config: baseline sparsity must be >= 0");
  require(search_mode == "random" || search_mode == "sweep", "config: search.mode must be random or sweep");
  require(trials >= 1, "config: search.trials must be >= 1");
  require(search_seed_count >= 1, "config: search.seeds_per_trial must be >= 1");
  require(space.mu_low >= 0.0 && space.mu_high > space.mu_low, "config: bad mu range");
  require(space.eta_step > 0.0 && space.eta_high >= space.eta_step, "config: bad eta grid");
  require(space.gamma_step > 0.0 && space.gamma_high >= space.gamma_step, "config: bad gamma grid");
  require(space.lambda_step > 0.0 && space.lambda_high > space.lambda_low && space.lambda_high <= 1.0,
          "config: bad lambda grid");
  require(!sweep_mu1.empty(), "config: search.sweep_mu1 must not be empty");
  require(!bench_sizes.empty(), "config: bench.sizes must not be empty");
  require(std::is_sorted(bench_sizes.begin(), bench_sizes.end()), "config: bench.sizes must be ascending");
  require(bench_reps >= 1, "config: bench.reps must be >= 1");
  require(bench_min_seconds > 0.0, "config: bench.min_seconds must be positive");
  estimator.validate(std::max(n, 1));
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  check_keys(j, "<root>", {"name", "data", "estimator", "baseline", "runs", "metrics", "output", "search", "bench"});
  get_if(j, "name", c.name);

  if (j.contains("data")) {
    const json& d = j.at("data");
    check_keys(d, "data", {"topology", "n", "T", "burn_in", "gso_file", "first_lag"});
    std::string topo = to_string(c.topology);
    get_if(d, "topology", topo);
    c.topology = parse_topology(topo);
    get_if(d, "n", c.n);
    get_if(d, "T", c.T);
    get_if(d, "burn_in", c.burn_in);
    get_if(d, "gso_file", c.gso_file);
    std::string fl = first_lag_name(c.first_lag);
    get_if(d, "first_lag", fl);
    c.first_lag = parse_first_lag(fl);
  }

  if (j.contains("estimator")) {
    const json& e = j.at("estimator");
    check_keys(e, "estimator",
               {"order", "variants", "mu", "eta", "gamma", "lambda", "epsilon", "w_threshold", "steps", "h_update",
                "debias", "early_stop", "power_iterations", "fallback_step", "armijo", "detector"});
    EstimatorConfig& ec = c.estimator;
    get_if(e, "order", ec.order);
    get_if(e, "variants", c.variants);
    if (e.contains("mu")) {
      if (e.at("mu").is_number()) ec.mu.assign(ec.order, e.at("mu").get<double>());
      else get_if(e, "mu", ec.mu);
    } else if (static_cast<int>(ec.mu.size()) != ec.order) {
      ec.mu.resize(ec.order, ec.mu.empty() ? 0.05 : ec.mu.back());
    }
    get_if(e, "eta", ec.eta);
    get_if(e, "gamma", ec.gamma);
    get_if(e, "lambda", ec.lambda);
    get_if(e, "epsilon", ec.epsilon);
    std::string wt = to_string(ec.w_threshold);
    get_if(e, "w_threshold", wt);
    ec.w_threshold = parse_w_threshold(wt);
    if (e.contains("steps")) {
      const json& s = e.at("steps");
      check_keys(s, "estimator.steps", {"psi", "debias", "w", "h"});
      read_step(s, "psi", ec.psi_step);
      read_step(s, "debias", ec.debias_step);
      read_step(s, "w", ec.w_step);
      read_step(s, "h", ec.h_step);
    }
    std::string hm = to_string(ec.h_mode);
    get_if(e, "h_update", hm);
    ec.h_mode = parse_h_mode(hm);
    get_if(e, "debias", ec.debias);
    get_if(e, "early_stop", ec.early_stop);
    get_if(e, "power_iterations", ec.power_iterations);
    get_if(e, "fallback_step", ec.fallback_step);
    if (e.contains("armijo")) {
      const json& a = e.at("armijo");
      check_keys(a, "estimator.armijo", {"c", "ratio", "max_backtracks"});
      get_if(a, "c", ec.armijo.c);
      get_if(a, "ratio", ec.armijo.ratio);
      get_if(a, "max_backtracks", ec.armijo.max_backtracks);
    }
    if (e.contains("detector")) {
      const json& d = e.at("detector");
      check_keys(d, "estimator.detector", {"topology", "coefficients"});
      read_detector(d, "topology", ec.topology_detector);
      read_detector(d, "coefficients", ec.coefficient_detector);
    }
  }

  if (j.contains("baseline")) {
    const json& b = j.at("baseline");
    check_keys(b, "baseline", {"enabled", "sparsity", "gradient", "tol"});
    get_if(b, "enabled", c.baseline);
    get_if(b, "sparsity", c.baseline_sparsity);
    std::string g = var_gradient_name(c.baseline_gradient);
    get_if(b, "gradient", g);
    c.baseline_gradient = parse_var_gradient(g);
    get_if(b, "tol", c.baseline_tol);
  }

  if (j.contains("runs")) {
    const json& r = j.at("runs");
    check_keys(r, "runs", {"seeds", "base_seed", "monte_carlo_runs", "workers"});
    require(!(r.contains("seeds") && r.contains("base_seed")), "config: give runs.seeds or runs.base_seed, not both");
    get_if(r, "seeds", c.seeds);
    if (r.contains("base_seed") || r.contains("monte_carlo_runs")) {
      Seed base = 1;
      long count = 5;
      get_if(r, "base_seed", base);
      get_if(r, "monte_carlo_runs", count);
      require(count >= 1, "config: runs.monte_carlo_runs must be >= 1");
      c.seeds.clear();
      for (long k = 0; k < count; ++k) c.seeds.push_back(base + static_cast<Seed>(k));
    }
    get_if(r, "workers", c.workers);
  }

  if (j.contains("metrics")) {
    const json& m = j.at("metrics");
    check_keys(m, "metrics", {"steady_window", "edge_tol"});
    get_if(m, "steady_window", c.steady_window);
    get_if(m, "edge_tol", c.edge_tol);
  }

  if (j.contains("output")) {
    const json& o = j.at("output");
    check_keys(o, "output", {"trace", "snapshots", "snapshot_stride"});
    get_if(o, "trace", c.write_trace);
    get_if(o, "snapshots", c.write_snapshots);
    get_if(o, "snapshot_stride", c.snapshot_stride);
  }

  if (j.contains("search")) {
    const json& s = j.at("search");
    check_keys(s, "search", {"mode", "trials", "seed", "seeds_per_trial", "space", "sweep_mu1"});
    get_if(s, "mode", c.search_mode);
    get_if(s, "trials", c.trials);
    get_if(s, "seed", c.search_seed);
    get_if(s, "seeds_per_trial", c.search_seed_count);
    get_if(s, "sweep_mu1", c.sweep_mu1);
    if (s.contains("space")) {
      const json& sp = s.at("space");
      check_keys(sp, "search.space",
                 {"mu_low", "mu_high", "eta_step", "eta_high", "gamma_step", "gamma_high", "lambda_low", "lambda_step",
                  "lambda_high"});
      get_if(sp, "mu_low", c.space.mu_low);
      get_if(sp, "mu_high", c.space.mu_high);
      get_if(sp, "eta_step", c.space.eta_step);
      get_if(sp, "eta_high", c.space.eta_high);
      get_if(sp, "gamma_step", c.space.gamma_step);
      get_if(sp, "gamma_high", c.space.gamma_high);
      get_if(sp, "lambda_low", c.space.lambda_low);
      get_if(sp, "lambda_step", c.space.lambda_step);
      get_if(sp, "lambda_high", c.space.lambda_high);
    }
  }

  if (j.contains("bench")) {
    const json& b = j.at("bench");
    check_keys(b, "bench", {"sizes", "reps", "min_seconds"});
    get_if(b, "sizes", c.bench_sizes);
    get_if(b, "reps", c.bench_reps);
    get_if(b, "min_seconds", c.bench_min_seconds);
  }

  c.validate();
  return c;
}

json estimator_to_json(const EstimatorConfig& e) {
  return {{"order", e.order},
          {"mu", e.mu},
          {"eta", e.eta},
          {"gamma", e.gamma},
          {"lambda", e.lambda},
          {"epsilon", e.epsilon},
          {"w_threshold", to_string(e.w_threshold)},
          {"steps", {{"psi", step_json(e.psi_step)}, {"debias", step_json(e.debias_step)}, {"w", step_json(e.w_step)}, {"h", step_json(e.h_step)}}},
          {"h_update", to_string(e.h_mode)},
          {"debias", e.debias},
          {"early_stop", e.early_stop},
          {"power_iterations", e.power_iterations},
          {"fallback_step", e.fallback_step},
          {"armijo", {{"c", e.armijo.c}, {"ratio", e.armijo.ratio}, {"max_backtracks", e.armijo.max_backtracks}}},
          {"detector",
           {{"topology", detector_json(e.topology_detector)},
            {"coefficients", detector_json(e.coefficient_detector)}}}};
}

json to_json(const ExperimentConfig& c) {
  json est = estimator_to_json(c.estimator);
  est["variants"] = c.variants;
  return {{"name", c.name},
          {"data",
           {{"topology", to_string(c.topology)},
            {"n", c.n},
            {"T", c.T},
            {"burn_in", c.burn_in},
            {"gso_file", c.gso_file},
            {"first_lag", first_lag_name(c.first_lag)}}},
          {"estimator", est},
          {"baseline",
           {{"enabled", c.baseline},
            {"sparsity", c.baseline_sparsity},
            {"gradient", var_gradient_name(c.baseline_gradient)},
            {"tol", c.baseline_tol}}},
          {"runs", {{"seeds", c.seeds}, {"workers", c.workers}}},
          {"metrics", {{"steady_window", c.steady_window}, {"edge_tol", c.edge_tol}}},
          {"output",
           {{"trace", c.write_trace}, {"snapshots", c.write_snapshots}, {"snapshot_stride", c.snapshot_stride}}},
          {"search",
           {{"mode", c.search_mode},
            {"trials", c.trials},
            {"seed", c.search_seed},
            {"seeds_per_trial", c.search_seed_count},
            {"sweep_mu1", c.sweep_mu1},
            {"space",
             {{"mu_low", c.space.mu_low},
              {"mu_high", c.space.mu_high},
              {"eta_step", c.space.eta_step},
              {"eta_high", c.space.eta_high},
              {"gamma_step", c.space.gamma_step},
              {"gamma_high", c.space.gamma_high},
              {"lambda_low", c.space.lambda_low},
              {"lambda_step", c.space.lambda_step},
              {"lambda_high", c.space.lambda_high}}}}},
          {"bench", {{"sizes", c.bench_sizes}, {"reps", c.bench_reps}, {"min_seconds", c.bench_min_seconds}}}};
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParameterError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(is, nullptr, true, true);  // comments allowed
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
  ExperimentConfig c = experiment_config_from_json(j);
  if (!c.gso_file.empty() && fs::path(c.gso_file).is_relative())
    c.gso_file = (fs::path(path).parent_path() / c.gso_file).string();
  return c;
}

SyntheticProblem make_problem(const ExperimentConfig& c, Seed seed) {
  SyntheticProblem p;
  if (c.topology == Topology::External) {
    p.w = read_gso_csv(c.gso_file);
    require(p.w.rows() == c.n || c.n == 0, "config: gso_file size does not match data.n");
  } else {
    p.w = generate_gso(c.topology, c.n, derive_seed(seed, 1)).weights;
  }
  p.h = generate_filter_coeffs(c.estimator.order, derive_seed(seed, 2), c.first_lag);
  p.stream = simulate_cgp(p.w, p.h, c.T, c.burn_in, derive_seed(seed, 3));
  return p;
}

RunSummary summarise_run(const std::string& variant, Seed seed, const SyntheticProblem& p,
                         const EstimatorConfig& base, long steady_window, double edge_tol, EstimatorTrace* trace_out,
                         bool keep_snapshots, long snapshot_stride) {
  RunSummary r;
  r.algorithm = variant;
  r.seed = seed;
  try {
    RunOptions opts;
    opts.truth = p.w;
    opts.edge_tol = edge_tol;
    opts.keep_snapshots = keep_snapshots;
    opts.snapshot_stride = snapshot_stride;
    EstimatorTrace tr = run_adacgp(p.stream, with_variant(base, variant), opts);
    r.nmse_w = tail_mean(tr.nmse_w, steady_window);
    r.nmse_x_psi = tail_mean(tr.nmse_psi, steady_window);
    r.nmse_x_h = tail_mean(tr.nmse_h, steady_window);
    const auto rep = classify_edges(p.w, tr.final_w, edge_tol);
    r.precision = rep.precision;
    r.recall = rep.recall;
    r.f1 = rep.f1;
    r.p_miss = rep.p_miss;
    r.p_false_alarm = rep.p_false_alarm;
    r.est_nnz = rep.est_nnz;
    r.true_nnz = rep.true_nnz;
    r.debias_onset = tr.debias_onset;
    r.terminated_at = tr.terminated_at;
    r.steps = tr.length();
    if (trace_out) *trace_out = std::move(tr);
  } catch (const NumericalError& e) {
    r.ok = false;
    r.error = e.what();
  }
  return r;
}

json to_json(const RunSummary& r) {
  json j = {{"algorithm", r.algorithm}, {"seed", r.seed}, {"ok", r.ok}};
  if (!r.ok) {
    j["error"] = r.error;
    return j;
  }
  j.update({{"nmse_W", num(r.nmse_w)},
            {"nmse_x_psi", num(r.nmse_x_psi)},
            {"nmse_x_h", num(r.nmse_x_h)},
            {"precision", r.precision},
            {"recall", r.recall},
            {"f1", r.f1},
            {"p_miss", r.p_miss},
            {"p_false_alarm", r.p_false_alarm},
            {"est_nnz", r.est_nnz},
            {"true_nnz", r.true_nnz},
            {"debias_onset", r.debias_onset},
            {"terminated_at", r.terminated_at},
            {"steps", r.steps}});
  return j;
}

json ResultSet::to_json() const {
  json rows = json::array();
  for (const auto& a : aggregate)
    rows.push_back({{"algorithm", a.algorithm},
                    {"runs", a.runs},
                    {"failures", a.failures},
                    {"nmse_W", {{"mean", num(a.nmse_w_mean)}, {"std", num(a.nmse_w_std)}}},
                    {"nmse_x_psi", {{"mean", num(a.nmse_x_psi_mean)}, {"std", num(a.nmse_x_psi_std)}}},
                    {"nmse_x_h", {{"mean", num(a.nmse_x_h_mean)}, {"std", num(a.nmse_x_h_std)}}},
                    {"p_miss", {{"mean", num(a.p_miss_mean)}, {"std", num(a.p_miss_std)}}},
                    {"p_false_alarm", {{"mean", num(a.p_fa_mean)}, {"std", num(a.p_fa_std)}}},
                    {"f1", {{"mean", num(a.f1_mean)}, {"std", num(a.f1_std)}}}});
  json per_run = json::array();
  for (const auto& r : runs) per_run.push_back(adacgp::to_json(r));
  return {{"aggregate", rows}, {"runs", per_run}, {"aggregation", "mean and sample std over successful seeds"}};
}

ResultSet run_experiment(const ExperimentConfig& c, const ExperimentOutputs& out) {
  c.validate();
  const bool writing = !out.dir.empty();
  if (writing) fs::create_directories(out.dir);

  std::vector<std::string> algorithms = c.variants;
  if (c.baseline) algorithms.push_back("adaptive-var");
  const std::size_t ns = c.seeds.size();
  std::vector<RunSummary> runs(algorithms.size() * ns);

  parallel_for(ns, c.workers, [&](std::size_t si) {
    const Seed seed = c.seeds[si];
    SyntheticProblem p;
    try {
      p = make_problem(c, seed);
    } catch (const NumericalError& e) {
      for (std::size_t a = 0; a < algorithms.size(); ++a) {
        RunSummary& r = runs[a * ns + si];
        r.algorithm = algorithms[a];
        r.seed = seed;
        r.ok = false;
        r.error = std::string("data generation: ") + e.what();
      }
      return;
    }
    for (std::size_t a = 0; a < c.variants.size(); ++a) {
      const std::string& v = c.variants[a];
      EstimatorTrace tr;
      runs[a * ns + si] = summarise_run(v, seed, p, c.estimator, c.steady_window, c.edge_tol, &tr,
                                        writing && c.write_snapshots, c.snapshot_stride);
      if (!writing || !runs[a * ns + si].ok) continue;
      const std::string stem = v + "_seed" + std::to_string(seed);
      if (c.write_snapshots)
        for (const auto& s : tr.snapshots)
          write_gso_csv((fs::path(out.dir) / ("gso_" + stem + "_t" + std::to_string(s.step) + ".csv")).string(), s.w);
      write_gso_csv((fs::path(out.dir) / ("gso_" + stem + "_final.csv")).string(), tr.final_w);
      if (c.write_trace) {
        std::ofstream os(fs::path(out.dir) / ("trace_" + stem + ".jsonl"));
        write_trace_jsonl(os, tr, c.write_snapshots ? std::function<std::string(long)>([&](long step) {
          return "gso_" + stem + "_t" + std::to_string(step) + ".csv";
        })
                                                    : std::function<std::string(long)>());
      }
    }
    if (c.baseline) {
      RunSummary& r = runs[c.variants.size() * ns + si];
      r.algorithm = "adaptive-var";
      r.seed = seed;
      try {
        const auto b = run_adaptive_var(p.stream, c.estimator.order, c.estimator.lambda, c.baseline_sparsity,
                                        c.baseline_gradient, c.baseline_tol);
        const auto rep = classify_edges(p.w, b.w, c.baseline_tol);
        r.nmse_w = nmse_gso(p.w, b.w);
        r.nmse_x_psi = tail_mean(b.nmse_pred, c.steady_window);
        r.nmse_x_h = kNaN;
        r.precision = rep.precision;
        r.recall = rep.recall;
        r.f1 = rep.f1;
        r.p_miss = rep.p_miss;
        r.p_false_alarm = rep.p_false_alarm;
        r.est_nnz = rep.est_nnz;
        r.true_nnz = rep.true_nnz;
        r.steps = p.stream.length();
        if (writing)
          write_gso_csv((fs::path(out.dir) / ("gso_adaptive-var_seed" + std::to_string(seed) + "_final.csv")).string(),
                        b.w);
      } catch (const NumericalError& e) {
        r.ok = false;
        r.error = e.what();
      }
    }
  });

  ResultSet rs;
  rs.runs = runs;
  for (std::size_t a = 0; a < algorithms.size(); ++a) {
    AggregateRow row;
    row.algorithm = algorithms[a];
    std::vector<double> w, xp, xh, pm, pfa, f1;
    for (std::size_t si = 0; si < ns; ++si) {
      const RunSummary& r = runs[a * ns + si];
      if (!r.ok) {
        ++row.failures;
        log::warn(r.algorithm + " seed " + std::to_string(r.seed) + " failed: " + r.error);
        continue;
      }
      ++row.runs;
      w.push_back(r.nmse_w);
      xp.push_back(r.nmse_x_psi);
      xh.push_back(r.nmse_x_h);
      pm.push_back(r.p_miss);
      pfa.push_back(r.p_false_alarm);
      f1.push_back(r.f1);
    }
    row.nmse_w_mean = mean(w), row.nmse_w_std = stddev(w);
    row.nmse_x_psi_mean = mean(xp), row.nmse_x_psi_std = stddev(xp);
    row.nmse_x_h_mean = mean(xh), row.nmse_x_h_std = stddev(xh);
    row.p_miss_mean = mean(pm), row.p_miss_std = stddev(pm);
    row.p_fa_mean = mean(pfa), row.p_fa_std = stddev(pfa);
    row.f1_mean = mean(f1), row.f1_std = stddev(f1);
    rs.aggregate.push_back(row);
  }

  if (writing) {
    json j = rs.to_json();
    j["config"] = to_json(c);
    write_text(fs::path(out.dir) / "results.json", j.dump(2) + "\n");
  }
  return rs;
}

EstimatorConfig sample_trial(const EstimatorConfig& base, const SearchSpace& sp, std::mt19937_64& rng) {
  EstimatorConfig e = base;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // (low, high]: mirror a [0, 1) draw so the upper end is reachable.
  for (double& m : e.mu) m = sp.mu_high - u(rng) * (sp.mu_high - sp.mu_low);
  auto grid = [&](double first, double step, double high) {
    const long count = static_cast<long>(std::floor((high - first) / step + 1e-9)) + 1;
    std::uniform_int_distribution<long> k(0, count - 1);
    return std::round((first + step * k(rng)) * 1e9) / 1e9;
  };
  e.eta = grid(sp.eta_step, sp.eta_step, sp.eta_high);
  e.gamma = grid(sp.gamma_step, sp.gamma_step, sp.gamma_high);
  e.lambda = grid(sp.lambda_low + sp.lambda_step, sp.lambda_step, sp.lambda_high);
  return e;
}

SearchResult hyperparameter_search(const ExperimentConfig& c, int trials, Seed seed) {
  c.validate();
  require(trials >= 1, "search: trials must be >= 1");
  const std::string variant = c.variants.front();
  const std::size_t nseeds = std::min<std::size_t>(c.seeds.size(), static_cast<std::size_t>(c.search_seed_count));

  std::vector<SyntheticProblem> problems(nseeds);
  for (std::size_t i = 0; i < nseeds; ++i) problems[i] = make_problem(c, c.seeds[i]);

  std::mt19937_64 rng(seed);
  std::vector<Trial> board(trials);
  for (auto& t : board) t.config = sample_trial(c.estimator, c.space, rng);

  parallel_for(board.size(), c.workers, [&](std::size_t i) {
    Trial& t = board[i];
    double total = 0.0;
    for (std::size_t s = 0; s < nseeds; ++s) {
      const RunSummary r = summarise_run(variant, c.seeds[s], problems[s], t.config, c.steady_window, c.edge_tol);
      if (!r.ok || !std::isfinite(r.nmse_x_h)) {
        t.ok = false;
        t.error = r.ok ? "no finite NMSE(x_h) in the steady-state window" : r.error;
        t.objective = kNaN;
        return;
      }
      total += r.nmse_x_h;
    }
    t.objective = total / double(nseeds);
  });

  std::stable_sort(board.begin(), board.end(), [](const Trial& a, const Trial& b) {
    if (a.ok != b.ok) return a.ok;
    return a.ok && a.objective < b.objective;
  });
  if (!board.front().ok) throw SearchFailed("search: all " + std::to_string(trials) + " trials diverged", board);
  return SearchResult{board.front().config, board};
}

json to_json(const SearchResult& r) {
  json board = json::array();
  for (std::size_t i = 0; i < r.leaderboard.size(); ++i) {
    const Trial& t = r.leaderboard[i];
    json row = {{"rank", i + 1}, {"ok", t.ok}, {"objective", num(t.objective)},
                {"mu", t.config.mu},  {"eta", t.config.eta}, {"gamma", t.config.gamma},
                {"lambda", t.config.lambda}};
    if (!t.ok) row["error"] = t.error;
    board.push_back(row);
  }
  return {{"best", estimator_to_json(r.best)}, {"objective", "mean steady-state NMSE(x_h)"}, {"leaderboard", board}};
}

SweepResult sparsity_sweep(const ExperimentConfig& c) {
  c.validate();
  const std::size_t ns = c.seeds.size(), nm = c.sweep_mu1.size(), nv = c.variants.size();
  std::vector<SyntheticProblem> problems(ns);
  parallel_for(ns, c.workers, [&](std::size_t i) { problems[i] = make_problem(c, c.seeds[i]); });

  SweepResult out;
  out.points.resize(nv * ns * nm);
  parallel_for(out.points.size(), c.workers, [&](std::size_t k) {
    const std::size_t v = k / (ns * nm), s = (k / nm) % ns, m = k % nm;
    EstimatorConfig e = c.estimator;
    e.mu[0] = c.sweep_mu1[m];
    const RunSummary r = summarise_run(c.variants[v], c.seeds[s], problems[s], e, c.steady_window, c.edge_tol);
    SweepPoint& p = out.points[k];
    p.variant = c.variants[v];
    p.seed = c.seeds[s];
    p.mu1 = c.sweep_mu1[m];
    p.ok = r.ok && std::isfinite(r.nmse_x_h);
    p.nmse_x_h = r.ok ? r.nmse_x_h : kNaN;
    p.est_nnz = r.est_nnz;
    p.true_nnz = r.true_nnz;
    p.p_miss = r.p_miss;
    p.p_false_alarm = r.p_false_alarm;
  });

  for (std::size_t v = 0; v < nv; ++v) {
    SweepSummary sum;
    sum.variant = c.variants[v];
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_m = nm;
    for (std::size_t m = 0; m < nm; ++m) {
      std::vector<double> vals;
      bool all_ok = true;
      for (std::size_t s = 0; s < ns; ++s) {
        const SweepPoint& p = out.points[(v * ns + s) * nm + m];
        all_ok = all_ok && p.ok;
        vals.push_back(p.nmse_x_h);
      }
      if (!all_ok) continue;
      const double avg = mean(vals);
      if (avg < best) best = avg, best_m = m;
    }
    if (best_m == nm) {
      sum.best_mu1 = sum.median_nnz = sum.median_true = kNaN;
    } else {
      std::vector<double> nnz, truth;
      for (std::size_t s = 0; s < ns; ++s) {
        const SweepPoint& p = out.points[(v * ns + s) * nm + best_m];
        nnz.push_back(double(p.est_nnz));
        truth.push_back(double(p.true_nnz));
      }
      sum.best_mu1 = c.sweep_mu1[best_m];
      sum.median_nnz = median(nnz);
      sum.median_true = median(truth);
    }
    out.summary.push_back(sum);
  }
  return out;
}

json SweepResult::to_json() const {
  json pts = json::array();
  for (const auto& p : points)
    pts.push_back({{"variant", p.variant},
                   {"seed", p.seed},
                   {"mu1", p.mu1},
                   {"ok", p.ok},
                   {"nmse_x_h", num(p.nmse_x_h)},
                   {"est_nnz", p.est_nnz},
                   {"true_nnz", p.true_nnz},
                   {"p_miss", p.p_miss},
                   {"p_false_alarm", p.p_false_alarm}});
  json sum = json::array();
  for (const auto& s : summary)
    sum.push_back({{"variant", s.variant},
                   {"best_mu1", num(s.best_mu1)},
                   {"median_nnz", num(s.median_nnz)},
                   {"median_true_nnz", num(s.median_true)}});
  return {{"points", pts}, {"summary", sum}};
}

BoolMatrix read_mask_csv(std::istream& is, const std::string& source) {
  const csv::Table t = csv::read_table(is, source);
  if (t.rows.empty()) throw ParseError(source + ": empty mask");
  const Index n = static_cast<Index>(t.rows.size());
  if (static_cast<Index>(t.rows.front().size()) != n)
    throw ParseError(source + ":" + std::to_string(t.line_numbers.front()) + ": mask must be square, got " +
                     std::to_string(n) + " rows of " + std::to_string(t.rows.front().size()) + " columns");
  BoolMatrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double v = t.rows[i][j];
      if (v != 0.0 && v != 1.0)
        throw ParseError(source + ":" + std::to_string(t.line_numbers[i]) + ": mask entries must be 0 or 1");
      m(i, j) = v == 1.0;
    }
  return m;
}

IngestResult ingest_stream(const std::string& path, const std::string& mask_path, bool normalize) {
  std::ifstream is(path);
  if (!is) throw ParameterError("cannot open stream file " + path);
  IngestResult r;
  r.stream = read_stream_csv(is, path);
  const Index n = r.stream.n();
  if (normalize) {
    Matrix& x = r.stream.samples;
    const double len = double(x.cols());
    for (Index i = 0; i < n; ++i) {
      const double mu = x.row(i).mean();
      x.row(i).array() -= mu;
      const double sd = std::sqrt(x.row(i).squaredNorm() / len);
      if (sd == 0.0 || !std::isfinite(sd)) {
        r.constant_channels.push_back(i);
        x.row(i).setZero();
        log::warn(path + ": channel " + std::to_string(i) + " is constant; zeroed after normalisation");
      } else {
        x.row(i) /= sd;
      }
    }
  }
  if (!mask_path.empty()) {
    std::ifstream ms(mask_path);
    if (!ms) throw ParameterError("cannot open mask file " + mask_path);
    BoolMatrix m = read_mask_csv(ms, mask_path);
    if (m.rows() != n)
      throw ParseError(mask_path + ": mask is " + std::to_string(m.rows()) + " x " + std::to_string(m.cols()) +
                       " but the stream has " + std::to_string(n) + " channels");
    r.mask = std::move(m);
  }
  return r;
}

}  // namespace adacgp
