#pragma once

#include <cmath>
#include <limits>

#include "adacgp/types.hpp"

namespace adacgp {

/// Largest eigenvalue of a symmetric PSD matrix by power iteration. The
/// iterate is kept between calls, so consecutive calls on a slowly
/// changing matrix converge within a few iterations.
class PowerIteration {
 public:
  explicit PowerIteration(int iterations = 8) : iterations_(iterations) {}

  double largest_eigenvalue(const Matrix& r);
  void reset() { v_.resize(0); }
  int iterations() const { return iterations_; }

 private:
  int iterations_;
  Vector v_;
};

/// alpha = (2 / lambda_max(R)) * 1 / (||x_window||^2 + epsilon).
/// Falls back to `fallback` when lambda_max is zero or not finite.
double adaptive_step_size(double lambda_max, double window_sq_norm, double epsilon,
                          double fallback = 1e-3);
double adaptive_step_size(const Matrix& r, const Vector& x_window, double epsilon,
                          PowerIteration& power, double fallback = 1e-3);

struct ArmijoParams {
  double c = 1e-4;        // sufficient decrease constant
  double ratio = 0.5;     // backtracking factor
  int max_backtracks = 20;
};

struct ArmijoResult {
  double step = 0.0;
  bool warning = false;   // no acceptable step found; `step` is the minimum tried
  int backtracks = 0;
};

/// Largest s = init * ratio^k with f(x - s g) <= f(x) - c s ||g||^2.
template <class Objective, class Point>
ArmijoResult armijo_step(Objective&& objective, const Point& gradient, const Point& point,
                         double init_step, const ArmijoParams& params = {}) {
  if (!(init_step > 0.0)) throw ParameterError("armijo_step: initial step must be positive");
  const double g2 = gradient.squaredNorm();
  if (g2 == 0.0) return {init_step, false, 0};
  const double f0 = objective(point);
  double s = init_step;
  for (int k = 0; k <= params.max_backtracks; ++k) {
    const Point trial = point - s * gradient;
    const double f = objective(trial);
    if (std::isfinite(f) && f <= f0 - params.c * s * g2) return {s, false, k};
    if (k < params.max_backtracks) s *= params.ratio;
  }
  return {s, true, params.max_backtracks};
}

/// mu_{p,t} = mu_p * max |P_p - gamma Q_p|.
double sparsity_schedule(const Matrix& pxy_block, const Matrix& q_block, double gamma, double mu_base);
double sparsity_schedule(const Matrix& pxy_block, double mu_base);

/// eta_t = eta * max |Y^T x_t|.
double h_sparsity_schedule(const Matrix& y, const Vector& x_t, double eta);

struct DetectorParams {
  double alpha = 0.995;          // EMA smoothing
  long patience = 500;           // steps without sufficient improvement
  double rel_improvement = 0.01; // required relative drop of the EMA
};

/// Steady state: the EMA sigma_t = alpha sigma_{t-1} + (1 - alpha) nmse_t
/// has not dropped below (1 - rel_improvement) * best for `patience`
/// consecutive updates. sigma is seeded with the first observation.
class SteadyStateDetector {
 public:
  SteadyStateDetector() = default;
  explicit SteadyStateDetector(DetectorParams params) : params_(params) {}

  /// Feeds one observation; returns true once steady state is reached.
  bool update(double nmse);

  bool fired() const { return counter_ >= params_.patience; }
  double ema() const { return ema_; }
  double best() const { return best_; }
  long counter() const { return counter_; }
  long observations() const { return observations_; }
  const DetectorParams& params() const { return params_; }
  void reset();

 private:
  DetectorParams params_;
  double ema_ = 0.0;
  double best_ = std::numeric_limits<double>::infinity();
  long counter_ = 0;
  long observations_ = 0;
};

}  // namespace adacgp
