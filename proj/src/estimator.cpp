#include "adacgp/estimator.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "json.hpp"

#include "adacgp/logging.hpp"
#include "adacgp/metrics.hpp"

namespace adacgp {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void require(bool ok, const std::string& msg) {
  if (!ok) throw ParameterError(msg);
}

void check_step_rule(const StepRule& r, const char* name, bool allow_adaptive) {
  require(allow_adaptive || r.mode != StepMode::Adaptive,
          std::string(name) + ": the adaptive eigenvalue rule only applies to the filter step");
  require(r.value > 0.0 && std::isfinite(r.value), std::string(name) + ": step value must be positive");
}

double ratio_or_nan(double num, double den) { return den > 0.0 ? num / den : kNaN; }

}  // namespace

std::string to_string(Path p) { return p == Path::Path1 ? "p1" : "p2"; }

std::string to_string(DebiasMode m) { return m == DebiasMode::AfterSteadyState ? "debias" : "alt-debias"; }

std::string to_string(StepMode m) {
  switch (m) {
    case StepMode::Adaptive: return "adaptive";
    case StepMode::Armijo: return "armijo";
    case StepMode::Fixed: return "fixed";
  }
  return "?";
}

StepMode parse_step_mode(const std::string& s) {
  if (s == "adaptive") return StepMode::Adaptive;
  if (s == "armijo") return StepMode::Armijo;
  if (s == "fixed") return StepMode::Fixed;
  throw ParameterError("unknown step rule '" + s + "' (expected adaptive, armijo or fixed)");
}

std::string to_string(HUpdateMode m) {
  return m == HUpdateMode::Instantaneous ? "instantaneous" : "accumulated";
}

HUpdateMode parse_h_mode(const std::string& s) {
  if (s == "instantaneous") return HUpdateMode::Instantaneous;
  if (s == "accumulated") return HUpdateMode::Accumulated;
  throw ParameterError("unknown coefficient update '" + s + "' (expected instantaneous or accumulated)");
}

std::string to_string(WThreshold m) { return m == WThreshold::Filter ? "filter" : "gso"; }

WThreshold parse_w_threshold(const std::string& s) {
  if (s == "filter") return WThreshold::Filter;
  if (s == "gso") return WThreshold::Gso;
  throw ParameterError("unknown GSO threshold rule '" + s + "' (expected filter or gso)");
}

std::string variant_name(Path p, DebiasMode m) { return to_string(p) + "-" + to_string(m); }

void parse_variant(const std::string& name, Path& path, DebiasMode& mode) {
  const auto dash = name.find('-');
  if (dash == std::string::npos) throw ParameterError("bad variant '" + name + "'");
  const std::string p = name.substr(0, dash), d = name.substr(dash + 1);
  if (p == "p1") path = Path::Path1;
  else if (p == "p2") path = Path::Path2;
  else throw ParameterError("bad variant '" + name + "': path must be p1 or p2");
  if (d == "debias") mode = DebiasMode::AfterSteadyState;
  else if (d == "alt-debias") mode = DebiasMode::Alternating;
  else throw ParameterError("bad variant '" + name + "': expected debias or alt-debias");
}

void EstimatorConfig::validate(Index n) const {
  require(n >= 1, "estimator: need at least one node");
  require(order >= 1, "estimator: filter order must be >= 1");
  require(static_cast<int>(mu.size()) == order,
          "estimator: mu needs one value per lag (" + std::to_string(order) + "), got " +
              std::to_string(mu.size()));
  for (double m : mu) require(m >= 0.0 && std::isfinite(m), "estimator: mu must be >= 0");
  require(eta >= 0.0 && std::isfinite(eta), "estimator: eta must be >= 0");
  require(gamma >= 0.0 && std::isfinite(gamma), "estimator: gamma must be >= 0");
  require(lambda > 0.0 && lambda <= 1.0, "estimator: lambda must lie in (0, 1]");
  require(epsilon > 0.0, "estimator: epsilon must be positive");
  check_step_rule(psi_step, "psi_step", true);
  check_step_rule(debias_step, "debias_step", true);
  check_step_rule(w_step, "w_step", false);
  check_step_rule(h_step, "h_step", false);
  require(power_iterations >= 1, "estimator: power_iterations must be >= 1");
  require(fallback_step > 0.0, "estimator: fallback_step must be positive");
  require(topology_detector.patience >= 1 && coefficient_detector.patience >= 1,
          "estimator: detector patience must be >= 1");
  require(topology_detector.alpha >= 0.0 && topology_detector.alpha < 1.0 &&
              coefficient_detector.alpha >= 0.0 && coefficient_detector.alpha < 1.0,
          "estimator: detector alpha must lie in [0, 1)");
  if (mask) require(mask->rows() == n && mask->cols() == n, "estimator: edge mask must be N x N");
}

AdaCgpEstimator::AdaCgpEstimator(Index n, EstimatorConfig config)
    : n_(n),
      config_(std::move(config)),
      power_(config_.power_iterations),
      det_topology_(config_.topology_detector),
      det_coeff_(config_.coefficient_detector) {
  config_.validate(n);
  if (config_.mask) mask_ = &*config_.mask;
  const int p = config_.order;
  stats_ = RecursiveStats::zeros(n, p, config_.lambda);
  psi_ = FilterBank::zeros(n, p);
  w_ = SplitGSO::zeros(n);
  debiased_ = FilterBank::zeros(n, p);
  support_ = BoolMatrix::Constant(n, n * p, false);
  h_ = Vector::Zero(FilterCoeffs::size_for(p));
  history_ = Matrix::Zero(n, p);
}

bool AdaCgpEstimator::debias_active() const {
  if (!config_.debias) return false;
  return config_.debias_mode == DebiasMode::Alternating || phase_ != Phase::Topology;
}

Matrix AdaCgpEstimator::w() const {
  if (debias_active()) return debiased_.block(1);
  return w_.value();
}

Matrix AdaCgpEstimator::psi() const {
  if (debias_active()) return debiased_.value();
  return psi_.value();
}

double AdaCgpEstimator::adaptive_alpha(const Vector& x_window) {
  if (cached_step_at_ != steps_) {
    cached_step_ = adaptive_step_size(stats_.r, x_window, config_.epsilon, power_, config_.fallback_step);
    cached_step_at_ = steps_;
  }
  return cached_step_;
}

void AdaCgpEstimator::topology_step(const Vector& x_window, StepInfo& info) {
  const int order = config_.order;
  const Matrix value = psi_.value();
  // Path 1 leaves shift invariance to the GSO stage (Q = 0 here).
  Matrix q;
  if (config_.path == Path::Path2 && config_.gamma != 0.0 && order >= 2) q = psi_commutator_gradient(value, order);

  Vector mu_t(order);
  for (int p = 1; p <= order; ++p) {
    const auto pp = stats_.pxy.middleCols((p - 1) * n_, n_);
    mu_t(p - 1) = q.size() ? sparsity_schedule(pp, q.middleCols((p - 1) * n_, n_), config_.gamma, config_.mu[p - 1])
                           : sparsity_schedule(pp, config_.mu[p - 1]);
  }

  const Matrix g = psi_gradient(value, stats_, config_.gamma, q, mask_);
  double alpha = config_.psi_step.value;
  if (config_.psi_step.mode == StepMode::Adaptive) {
    alpha = adaptive_alpha(x_window);
  } else if (config_.psi_step.mode == StepMode::Armijo) {
    alpha = split_armijo(g, q.size() ? config_.gamma : 0.0, mu_t);
  }
  info.alpha = alpha;
  update_psi_split(psi_, g, mu_t, Vector::Constant(order, alpha), mask_);

  if (config_.path == Path::Path2) {
    w_.pos = psi_.pos.leftCols(n_);
    w_.neg = psi_.neg.leftCols(n_);
    return;
  }

  const Matrix psi_new = psi_.value();
  const Matrix wv = w_.value();
  const Matrix v = w_path1_direction(wv, psi_new, config_.gamma, order);
  double beta = config_.w_step.value;
  if (config_.w_step.mode == StepMode::Armijo) {
    const double gamma = config_.gamma;
    auto f = [&](const Matrix& m) { return w_objective(m, psi_new, gamma, order); };
    const auto res = armijo_step(f, v, wv, config_.w_step.value, config_.armijo);
    if (res.warning) log::warn("GSO step: Armijo search hit the backtrack limit at step " + std::to_string(steps_ + 1));
    beta = res.step;
  }
  info.beta = beta;
  const double mu_w = config_.w_threshold == WThreshold::Filter
                          ? mu_t(0)
                          : config_.mu[0] * psi_new.leftCols(n_).cwiseAbs().maxCoeff();
  project_w_split(w_, v, mu_w, beta, mask_);
}

// Armijo along the projection arc in the split variables z = (pos, neg):
// F(z) = f(pos - neg) + sum_p mu_p (sum pos_p + sum neg_p), accept the largest
// s with F(z(s)) <= F(z) + c <grad F, z(s) - z>. A search on f alone can
// overshoot, since an entry moving in both parts changes by 2 s G.
double AdaCgpEstimator::split_armijo(const Matrix& g, double gamma, const Vector& mu_t) {
  const int order = config_.order;
  auto penalised = [&](const FilterBank& b) {
    double l1 = 0.0;
    for (int p = 0; p < order; ++p)
      l1 += mu_t(p) * (b.pos.middleCols(p * n_, n_).sum() + b.neg.middleCols(p * n_, n_).sum());
    return psi_objective(b.value(), stats_, gamma, order) + l1;
  };
  const double f0 = penalised(psi_);
  double s = config_.psi_step.value;
  for (int k = 0; k <= config_.armijo.max_backtracks; ++k) {
    FilterBank trial = psi_;
    update_psi_split(trial, g, mu_t, Vector::Constant(order, s), mask_);
    double slope = 0.0;
    for (int p = 0; p < order; ++p) {
      const auto gb = g.middleCols(p * n_, n_).array();
      slope += ((mu_t(p) + gb) * (trial.pos - psi_.pos).middleCols(p * n_, n_).array()).sum();
      slope += ((mu_t(p) - gb) * (trial.neg - psi_.neg).middleCols(p * n_, n_).array()).sum();
    }
    const double f = penalised(trial);
    if (std::isfinite(f) && f <= f0 + config_.armijo.c * slope) return s;
    if (k < config_.armijo.max_backtracks) s *= config_.armijo.ratio;
  }
  log::warn("filter step: Armijo search hit the backtrack limit at step " + std::to_string(steps_ + 1));
  return s;
}

void AdaCgpEstimator::start_debias() {
  Matrix value = psi_.value();
  if (config_.path == Path::Path1) value.leftCols(n_) = w_.value();
  debiased_ = FilterBank::from_value(value, config_.order);
  support_ = value.array() != 0.0;
}

void AdaCgpEstimator::sync_alternating_support() {
  Matrix source = psi_.value();
  if (config_.path == Path::Path1) source.leftCols(n_) = w_.value();
  support_ = source.array() != 0.0;
  Matrix value = debiased_.value();
  for (Index j = 0; j < value.cols(); ++j)
    for (Index i = 0; i < n_; ++i) {
      if (!support_(i, j)) value(i, j) = 0.0;
      else if (value(i, j) == 0.0) value(i, j) = source(i, j);
    }
  debiased_ = FilterBank::from_value(value, config_.order);
}

void AdaCgpEstimator::coefficient_step(const Vector& x_t, StepInfo& info) {
  const Vector x_window = Eigen::Map<const Vector>(history_.data(), history_.size());
  double alpha = config_.debias_step.value;
  if (config_.debias_step.mode == StepMode::Adaptive) {
    alpha = adaptive_alpha(x_window);
  } else if (config_.debias_step.mode == StepMode::Armijo) {
    const Matrix value = debiased_.value();
    Matrix g = value * stats_.r - stats_.pxy;
    g = support_.select(g, 0.0);
    auto f = [&](const Matrix& m) { return psi_objective(m, stats_, 0.0, config_.order); };
    const auto res = armijo_step(f, g, value, config_.debias_step.value, config_.armijo);
    if (res.warning) log::warn("debias step: Armijo search hit the backtrack limit at step " + std::to_string(steps_ + 1));
    alpha = res.step;
  }
  debias_step(debiased_, support_, stats_, Vector::Constant(config_.order, alpha));

  const Matrix y = build_y_matrix(debiased_.block(1), history_, config_.order);
  const double eta_t = h_sparsity_schedule(y, x_t, config_.eta);
  if (config_.h_mode == HUpdateMode::Accumulated) accumulate_h_stats(stats_, y, x_t);

  double rho = config_.h_step.value;
  if (config_.h_step.mode == StepMode::Armijo) {
    const auto mode = config_.h_mode;
    auto f = [&](const Vector& h) { return h_objective(h, y, x_t, mode, stats_); };
    const Vector g = h_gradient(h_, y, x_t, mode, stats_);
    const auto res = armijo_step(f, g, h_, config_.h_step.value, config_.armijo);
    if (res.warning)
      log::warn("coefficient step: Armijo search hit the backtrack limit at step " + std::to_string(steps_ + 1));
    rho = res.step;
  }
  info.rho = rho;
  h_ = update_h(h_, y, x_t, rho, eta_t, config_.epsilon, config_.h_mode, stats_);
}

void AdaCgpEstimator::check_finite(long step) const {
  if (!psi_.pos.allFinite() || !psi_.neg.allFinite() || !w_.pos.allFinite() || !w_.neg.allFinite() ||
      !debiased_.pos.allFinite() || !debiased_.neg.allFinite() || !h_.allFinite())
    throw DivergenceError("estimator state became non-finite", step);
}

StepInfo AdaCgpEstimator::step(const Vector& x_t) {
  require(x_t.size() == n_, "estimator: sample has " + std::to_string(x_t.size()) + " entries, expected " +
                                std::to_string(n_));
  StepInfo info;
  info.step = steps_ + 1;
  if (!x_t.allFinite()) throw DivergenceError("non-finite input sample", info.step);
  if (phase_ == Phase::Finished) {
    info.phase = phase_;
    info.nmse_psi = info.nmse_h = kNaN;
    return info;
  }

  const Vector x_window = Eigen::Map<const Vector>(history_.data(), history_.size());
  const double xn = x_t.squaredNorm();
  const Matrix w_prev = w();
  info.nmse_psi = ratio_or_nan((x_t - psi() * x_window).squaredNorm(), xn);
  info.nmse_h = ratio_or_nan((x_t - build_y_matrix(w_prev, history_, config_.order) * h_).squaredNorm(), xn);

  try {
    update_recursive_stats(stats_, x_t, x_window);

    const bool run_topology = phase_ == Phase::Topology || config_.debias_mode == DebiasMode::Alternating;
    if (run_topology) topology_step(x_window, info);

    if (config_.debias) {
      if (config_.debias_mode == DebiasMode::Alternating) {
        sync_alternating_support();
        coefficient_step(x_t, info);
      } else if (phase_ == Phase::Debias) {
        coefficient_step(x_t, info);
      }
    }
  } catch (const DivergenceError&) {
    throw;
  } catch (const NumericalError& e) {
    throw DivergenceError(e.what(), info.step);
  }
  check_finite(info.step);

  // Detectors see this step's one-step prediction error.
  if (config_.debias && phase_ == Phase::Topology && config_.debias_mode == DebiasMode::AfterSteadyState &&
      std::isfinite(info.nmse_psi) && det_topology_.update(info.nmse_psi)) {
    start_debias();
    phase_ = Phase::Debias;
    debias_onset_ = info.step;
    info.debias_started = true;
  }
  const bool coeff_running = config_.debias && (config_.debias_mode == DebiasMode::Alternating ||
                                                (phase_ == Phase::Debias && !info.debias_started));
  if (coeff_running && !terminated_ && std::isfinite(info.nmse_h) && det_coeff_.update(info.nmse_h)) {
    terminated_ = true;
    info.terminated = true;
    if (config_.early_stop) phase_ = Phase::Finished;
  }

  for (Index k = history_.cols() - 1; k > 0; --k) history_.col(k) = history_.col(k - 1);
  history_.col(0) = x_t;
  ++steps_;
  info.phase = phase_;
  return info;
}

EstimatorTrace run_adacgp(const SignalStream& stream, const EstimatorConfig& config, const RunOptions& options) {
  const Index n = stream.n();
  if (options.truth)
    require(options.truth->rows() == n && options.truth->cols() == n, "run_adacgp: truth must be N x N");
  require(options.snapshot_stride >= 1, "run_adacgp: snapshot stride must be >= 1");
  AdaCgpEstimator est(n, config);
  EstimatorTrace trace;
  const long len = stream.length();
  trace.nmse_psi.reserve(len);
  trace.nmse_h.reserve(len);
  trace.nnz_w.reserve(len);
  trace.phase.reserve(len);

  for (long t = 0; t < len; ++t) {
    const StepInfo info = est.step(stream.samples.col(t));
    const Matrix w = est.w();
    trace.nmse_psi.push_back(info.nmse_psi);
    trace.nmse_h.push_back(info.nmse_h);
    trace.nnz_w.push_back(count_edges(w, options.edge_tol));
    trace.phase.push_back(static_cast<int>(info.phase));
    if (options.truth) {
      trace.nmse_w.push_back(nmse_gso(*options.truth, w));
      const auto rep = classify_edges(*options.truth, w, options.edge_tol);
      trace.p_miss.push_back(rep.p_miss);
      trace.p_false_alarm.push_back(rep.p_false_alarm);
    }
    if (options.keep_snapshots && info.step % options.snapshot_stride == 0) trace.snapshots.push_back({info.step, w});
    if (options.observer) options.observer(info, est);
    if (info.debias_started) trace.debias_onset = info.step;
    if (info.terminated) {
      trace.terminated_at = info.step;
      if (config.early_stop) break;
    }
  }
  trace.final_w = est.w();
  trace.final_psi = est.psi();
  trace.final_h = est.coefficients();
  return trace;
}

void write_trace_jsonl(std::ostream& os, const EstimatorTrace& trace,
                       const std::function<std::string(long)>& snapshot_name) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  std::size_t snap = 0;
  for (long i = 0; i < trace.length(); ++i) {
    const long step = i + 1;
    nlohmann::json rec;
    rec["step"] = step;
    rec["phase"] = trace.phase[i];
    rec["nmse_psi"] = num(trace.nmse_psi[i]);
    rec["nmse_h"] = num(trace.nmse_h[i]);
    rec["nnz_W"] = trace.nnz_w[i];
    if (trace.has_truth()) {
      rec["nmse_W"] = num(trace.nmse_w[i]);
      rec["p_miss"] = trace.p_miss[i];
      rec["p_fa"] = trace.p_false_alarm[i];
    }
    if (snapshot_name && snap < trace.snapshots.size() && trace.snapshots[snap].step == step) {
      rec["snapshot"] = snapshot_name(step);
      ++snap;
    }
    os << rec.dump() << '\n';
  }
}

}  // namespace adacgp
