#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "adacgp/baselines.hpp"
#include "adacgp/cgp_simulator.hpp"
#include "adacgp/estimator.hpp"
#include "adacgp/graph_models.hpp"

namespace adacgp {

using json = nlohmann::json;

struct SearchSpace {
  double mu_low = 0.001, mu_high = 1.0;       // uniform on (low, high]
  double eta_step = 0.005, eta_high = 0.1;    // {step, 2 step, ..., high}
  double gamma_step = 0.05, gamma_high = 2.0;
  double lambda_low = 0.80, lambda_step = 0.01, lambda_high = 0.99;  // (low, high] on the step grid
};

struct ExperimentConfig {
  std::string name = "experiment";

  // data
  Topology topology = Topology::Random;
  int n = 50;
  std::string gso_file;  // required for Topology::External
  long T = 10000;
  long burn_in = 1000;
  FirstLag first_lag = FirstLag::Identifiable;

  // estimator; path and debias mode are set per variant
  std::vector<std::string> variants{"p1-debias"};
  EstimatorConfig estimator;

  // baseline
  bool baseline = false;
  double baseline_sparsity = 0.05;
  VarGradient baseline_gradient = VarGradient::Instantaneous;
  double baseline_tol = 1e-9;

  std::vector<Seed> seeds{1, 2, 3, 4, 5};
  unsigned workers = 0;  // 0 = hardware concurrency

  long steady_window = 500;
  double edge_tol = 0.0;

  bool write_trace = true;
  bool write_snapshots = false;
  long snapshot_stride = 100;

  // search
  std::string search_mode = "random";  // random | sweep
  int trials = 200;
  Seed search_seed = 7;
  long search_seed_count = 1;          // leading entries of `seeds` used per trial
  SearchSpace space;
  std::vector<double> sweep_mu1{0.03, 0.04, 0.06, 0.08, 0.1, 0.12};

  // benchmark
  std::vector<int> bench_sizes{25, 50, 100, 200, 400};
  int bench_reps = 3;
  double bench_min_seconds = 0.01;

  void validate() const;
};

ExperimentConfig experiment_config_from_json(const json& j);
json to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::string& path);

/// The synthetic problem for one seed.
struct SyntheticProblem {
  Matrix w;
  FilterCoeffs h;
  SignalStream stream;
};
SyntheticProblem make_problem(const ExperimentConfig& c, Seed seed);

/// Steady-state summary of one run: NMSE values are means over the final
/// `steady_window` steps; edge rates come from the final estimate.
struct RunSummary {
  std::string algorithm;  // variant name or "adaptive-var"
  Seed seed = 0;
  bool ok = true;
  std::string error;
  double nmse_w = 0.0;
  double nmse_x_psi = 0.0;
  double nmse_x_h = 0.0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  double p_miss = 0.0, p_false_alarm = 0.0;
  long est_nnz = 0, true_nnz = 0;
  long debias_onset = -1, terminated_at = -1, steps = 0;
};
json to_json(const RunSummary& r);

/// Mean and sample standard deviation over the successful runs.
struct AggregateRow {
  std::string algorithm;
  long runs = 0, failures = 0;
  double nmse_w_mean = 0, nmse_w_std = 0;
  double nmse_x_psi_mean = 0, nmse_x_psi_std = 0;
  double nmse_x_h_mean = 0, nmse_x_h_std = 0;
  double p_miss_mean = 0, p_miss_std = 0;
  double p_fa_mean = 0, p_fa_std = 0;
  double f1_mean = 0, f1_std = 0;
};

struct ResultSet {
  std::vector<RunSummary> runs;
  std::vector<AggregateRow> aggregate;
  json to_json() const;
};

struct ExperimentOutputs {
  std::string dir;  // empty: nothing is written
};

/// Every (variant, seed) pair plus the optional baseline. Divergence is
/// recorded in the run summary and does not stop the set.
ResultSet run_experiment(const ExperimentConfig& c, const ExperimentOutputs& out = {});

/// Runs one variant on one problem and summarises it.
RunSummary summarise_run(const std::string& variant, Seed seed, const SyntheticProblem& p,
                         const EstimatorConfig& base, long steady_window, double edge_tol,
                         EstimatorTrace* trace_out = nullptr, bool keep_snapshots = false,
                         long snapshot_stride = 100);

struct Trial {
  EstimatorConfig config;
  double objective = 0.0;  // mean steady-state NMSE(x_h); NaN for a failed trial
  bool ok = true;
  std::string error;
};

struct SearchResult {
  EstimatorConfig best;
  std::vector<Trial> leaderboard;  // successful trials by objective, failures last
};

class SearchFailed : public NumericalError {
 public:
  SearchFailed(const std::string& what, std::vector<Trial> board)
      : NumericalError(what), leaderboard(std::move(board)) {}
  std::vector<Trial> leaderboard;
};

/// Draws one configuration from the search space.
EstimatorConfig sample_trial(const EstimatorConfig& base, const SearchSpace& space, std::mt19937_64& rng);

/// Random search over the first variant of `c`. Throws SearchFailed when
/// every trial diverges.
SearchResult hyperparameter_search(const ExperimentConfig& c, int trials, Seed seed);
json to_json(const SearchResult& r);
json estimator_to_json(const EstimatorConfig& e);

/// One row per (variant, seed, mu_1).
struct SweepPoint {
  std::string variant;
  Seed seed = 0;
  double mu1 = 0.0;
  bool ok = true;
  double nmse_x_h = 0.0;
  long est_nnz = 0, true_nnz = 0;
  double p_miss = 0.0, p_false_alarm = 0.0;
};

struct SweepSummary {
  std::string variant;
  double best_mu1 = 0.0;     // minimises the seed-mean steady-state NMSE(x_h)
  double median_nnz = 0.0;   // estimated edges at best_mu1, median over seeds
  double median_true = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<SweepSummary> summary;
  json to_json() const;
};

/// Sparsity sweep over mu_1 (other blocks keep their configured weight).
SweepResult sparsity_sweep(const ExperimentConfig& c);

/// Loaded external data.
struct IngestResult {
  SignalStream stream;
  std::optional<BoolMatrix> mask;
  std::vector<Index> constant_channels;  // zeroed after normalisation
};

/// Reads a stream CSV (one row per time step, one column per node) and an
/// optional N x N 0/1 mask. With `normalize`, each channel is shifted to
/// zero mean and unit standard deviation; constant channels are zeroed
/// with a warning.
IngestResult ingest_stream(const std::string& path, const std::string& mask_path = {},
                           bool normalize = true);
BoolMatrix read_mask_csv(std::istream& is, const std::string& source);

}  // namespace adacgp
