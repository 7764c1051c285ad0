#include "adacgp/adaptation.hpp"

#include <string>

namespace adacgp {

double PowerIteration::largest_eigenvalue(const Matrix& r) {
  if (r.rows() != r.cols()) throw ParameterError("power iteration: matrix must be square");
  const Index n = r.rows();
  if (n == 0) return 0.0;
  if (v_.size() != n) v_ = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  double estimate = 0.0;
  Vector w(n);
  for (int k = 0; k < iterations_; ++k) {
    w.noalias() = r * v_;
    const double norm = w.norm();
    if (norm == 0.0 || !std::isfinite(norm)) {
      // Iterate fell into the null space; restart from the uniform vector.
      v_ = Vector::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
      w.noalias() = r * v_;
      const double n2 = w.norm();
      if (n2 == 0.0 || !std::isfinite(n2)) return 0.0;
      v_ = w / n2;
      continue;
    }
    v_ = w / norm;
  }
  estimate = v_.dot(r * v_);  // Rayleigh quotient
  return estimate;
}

double adaptive_step_size(double lambda_max, double window_sq_norm, double epsilon, double fallback) {
  if (!(epsilon > 0.0)) throw ParameterError("adaptive_step_size: epsilon must be positive");
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) return fallback;
  return (2.0 / lambda_max) / (window_sq_norm + epsilon);
}

double adaptive_step_size(const Matrix& r, const Vector& x_window, double epsilon,
                          PowerIteration& power, double fallback) {
  return adaptive_step_size(power.largest_eigenvalue(r), x_window.squaredNorm(), epsilon, fallback);
}

double sparsity_schedule(const Matrix& pxy_block, const Matrix& q_block, double gamma, double mu_base) {
  if (pxy_block.rows() != q_block.rows() || pxy_block.cols() != q_block.cols())
    throw ParameterError("sparsity_schedule: block shapes differ");
  if (pxy_block.size() == 0) return 0.0;
  return mu_base * (pxy_block - gamma * q_block).cwiseAbs().maxCoeff();
}

double sparsity_schedule(const Matrix& pxy_block, double mu_base) {
  if (pxy_block.size() == 0) return 0.0;
  return mu_base * pxy_block.cwiseAbs().maxCoeff();
}

double h_sparsity_schedule(const Matrix& y, const Vector& x_t, double eta) {
  if (y.rows() != x_t.size()) throw ParameterError("h_sparsity_schedule: shape mismatch");
  if (y.cols() == 0) return 0.0;
  return eta * (y.transpose() * x_t).cwiseAbs().maxCoeff();
}

bool SteadyStateDetector::update(double nmse) {
  if (!std::isfinite(nmse) || nmse < 0.0)
    throw ParameterError("steady-state detector: observation must be finite and >= 0, got " +
                         std::to_string(nmse));
  if (observations_ == 0) {
    ema_ = nmse;
  } else {
    ema_ = params_.alpha * ema_ + (1.0 - params_.alpha) * nmse;
  }
  ++observations_;
  if (ema_ < (1.0 - params_.rel_improvement) * best_) {
    best_ = ema_;
    counter_ = 0;
  } else {
    ++counter_;
  }
  return fired();
}

void SteadyStateDetector::reset() {
  ema_ = 0.0;
  best_ = std::numeric_limits<double>::infinity();
  counter_ = 0;
  observations_ = 0;
}

}  // namespace adacgp
