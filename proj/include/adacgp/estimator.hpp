#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "adacgp/adaptation.hpp"
#include "adacgp/cgp_simulator.hpp"
#include "adacgp/estimator_ops.hpp"
#include "adacgp/types.hpp"

namespace adacgp {

enum class Path { Path1, Path2 };
enum class DebiasMode { AfterSteadyState, Alternating };
enum class StepMode { Adaptive, Armijo, Fixed };

// Threshold of the GSO sub-problem. Filter: reuse mu_1 * max|P_1 - gamma Q_1|
// from the filter stage. Gso: mu_1 * max|Psi_1|, the smallest weight that
// zeroes W, which does not grow with 1 / (1 - lambda).
enum class WThreshold { Filter, Gso };

std::string to_string(Path p);
std::string to_string(DebiasMode m);
std::string to_string(StepMode m);
StepMode parse_step_mode(const std::string& s);
HUpdateMode parse_h_mode(const std::string& s);
std::string to_string(HUpdateMode m);
std::string to_string(WThreshold m);
WThreshold parse_w_threshold(const std::string& s);

// "p1-debias", "p1-alt-debias", "p2-debias", "p2-alt-debias".
std::string variant_name(Path p, DebiasMode m);
void parse_variant(const std::string& name, Path& path, DebiasMode& mode);

struct StepRule {
  StepMode mode = StepMode::Adaptive;
  double value = 1e-3;  // fixed step, or the initial trial step for Armijo
};

struct EstimatorConfig {
  int order = 3;
  Path path = Path::Path1;
  DebiasMode debias_mode = DebiasMode::AfterSteadyState;
  std::vector<double> mu{0.075, 0.05, 0.05};  // base sparsity weight per lag block
  double eta = 0.01;                      // coefficient sparsity weight
  double gamma = 0.1;                     // commutativity weight
  double lambda = 0.98;                   // forgetting factor
  double epsilon = 1e-8;

  WThreshold w_threshold = WThreshold::Gso;

  StepRule psi_step{StepMode::Adaptive, 1e-3};  // A_t
  StepRule debias_step{StepMode::Adaptive, 1e-3};  // A_t of the debiasing stage
  StepRule w_step{StepMode::Armijo, 1.0};           // beta_t
  StepRule h_step{StepMode::Armijo, 1.0};           // rho_t
  HUpdateMode h_mode = HUpdateMode::Accumulated;

  std::optional<BoolMatrix> mask;  // allowed edges, applied to every block and to W

  DetectorParams topology_detector;     // sigma^(1), on NMSE(x_Psi)
  DetectorParams coefficient_detector;  // sigma^(2), on NMSE(x_h)
  bool debias = true;      // run the debiasing / coefficient stage at all
  bool early_stop = true;  // stop once sigma^(2) reaches steady state

  int power_iterations = 8;
  double fallback_step = 1e-3;
  ArmijoParams armijo;

  void validate(Index n) const;
};

enum class Phase { Topology = 0, Debias = 1, Finished = 2 };

struct StepInfo {
  long step = 0;           // 1-based index of the processed sample
  double nmse_psi = 0.0;   // one-step prediction error of the filter bank (NaN if x_t = 0)
  double nmse_h = 0.0;     // one-step prediction error of (W, h)
  Phase phase = Phase::Topology;  // phase after this step
  bool debias_started = false;    // the switch happened on this step
  bool terminated = false;        // sigma^(2) reached steady state on this step
  double alpha = 0.0;
  double beta = 0.0;
  double rho = 0.0;
};

/// Online estimator: projected-gradient filter and GSO updates on split
/// variables, followed (after steady state, or on every step) by the
/// support-restricted debiasing and the coefficient update. One instance
/// is a sequential state machine; run independent instances in parallel.
class AdaCgpEstimator {
 public:
  AdaCgpEstimator(Index n, EstimatorConfig config);

  StepInfo step(const Vector& x_t);

  Index n() const { return n_; }
  const EstimatorConfig& config() const { return config_; }
  long steps() const { return steps_; }
  Phase phase() const { return phase_; }
  long debias_onset() const { return debias_onset_; }
  bool terminated() const { return terminated_; }

  /// Reported GSO: the sparse estimate before debiasing starts, the
  /// debiased first filter block afterwards.
  Matrix w() const;
  /// Filter bank used for prediction (same switch as w()).
  Matrix psi() const;

  const FilterBank& topology_filters() const { return psi_; }
  const SplitGSO& topology_gso() const { return w_; }
  const FilterBank& debiased_filters() const { return debiased_; }
  const BoolMatrix& debias_support() const { return support_; }
  const Vector& coefficients() const { return h_; }
  const RecursiveStats& stats() const { return stats_; }
  const SteadyStateDetector& topology_detector() const { return det_topology_; }
  const SteadyStateDetector& coefficient_detector() const { return det_coeff_; }

 private:
  bool debias_active() const;
  double adaptive_alpha(const Vector& x_window);
  void topology_step(const Vector& x_window, StepInfo& info);
  double split_armijo(const Matrix& g, double gamma, const Vector& mu_t);
  void start_debias();
  void sync_alternating_support();
  void coefficient_step(const Vector& x_t, StepInfo& info);
  void check_finite(long step) const;

  Index n_;
  EstimatorConfig config_;
  const BoolMatrix* mask_ = nullptr;

  RecursiveStats stats_;
  FilterBank psi_;
  SplitGSO w_;
  FilterBank debiased_;
  BoolMatrix support_;
  Vector h_;
  Matrix history_;  // column k = x_{t-1-k}

  PowerIteration power_;
  double cached_step_ = 0.0;
  long cached_step_at_ = -1;
  SteadyStateDetector det_topology_;
  SteadyStateDetector det_coeff_;

  Phase phase_ = Phase::Topology;
  long steps_ = 0;
  long debias_onset_ = -1;
  bool terminated_ = false;
};

/// Per-step record of a run.
struct EstimatorTrace {
  std::vector<double> nmse_psi;
  std::vector<double> nmse_h;
  std::vector<long> nnz_w;     // off-diagonal non-zeros of the reported W
  std::vector<int> phase;
  // Filled only when a ground truth is supplied.
  std::vector<double> nmse_w;
  std::vector<double> p_miss;
  std::vector<double> p_false_alarm;

  long debias_onset = -1;
  long terminated_at = -1;

  struct Snapshot {
    long step;
    Matrix w;
  };
  std::vector<Snapshot> snapshots;

  Matrix final_w;
  Matrix final_psi;
  Vector final_h;

  long length() const { return static_cast<long>(nmse_psi.size()); }
  bool has_truth() const { return !nmse_w.empty(); }
};

struct RunOptions {
  std::optional<Matrix> truth;  // enables per-step NMSE(W), P_M, P_FA
  double edge_tol = 0.0;
  long snapshot_stride = 100;
  bool keep_snapshots = false;  // full-matrix snapshots are opt-in
  std::function<void(const StepInfo&, const AdaCgpEstimator&)> observer;
};

/// Runs the estimator over a stream; stops early once the coefficient stage
/// reaches steady state when config.early_stop is set. Divergence raises
/// DivergenceError naming the step.
EstimatorTrace run_adacgp(const SignalStream& stream, const EstimatorConfig& config,
                          const RunOptions& options = {});

/// JSON-lines, one record per step:
/// {"step":..,"nmse_psi":..,"nmse_h":..,"nnz_W":..[,"nmse_W":..][,"snapshot":".."]}
/// `snapshot_name(step)` gives the file name referenced by snapshot records.
void write_trace_jsonl(std::ostream& os, const EstimatorTrace& trace,
                       const std::function<std::string(long)>& snapshot_name = {});

}  // namespace adacgp
