#include "adacgp/baselines.hpp"

#include <cmath>
#include <limits>

namespace adacgp {

AdaptiveVarState AdaptiveVarState::make(Index n, int order, double lambda, double sparsity_weight,
                                        VarGradient gradient) {
  if (n < 1 || order < 1) throw ParameterError("adaptive VAR: need n >= 1 and order >= 1");
  if (sparsity_weight < 0.0) throw ParameterError("adaptive VAR: sparsity weight must be >= 0");
  AdaptiveVarState s;
  s.order = order;
  s.coeffs = Matrix::Zero(n, n * order);
  s.stats = RecursiveStats::zeros(n, order, lambda);
  s.sparsity_weight = sparsity_weight;
  s.gradient = gradient;
  return s;
}

void update_adaptive_var(AdaptiveVarState& state, const Vector& x_t, const Vector& x_window, double step,
                         PowerIteration* power, double epsilon) {
  const Index n = state.n();
  if (x_t.size() != n || x_window.size() != n * state.order)
    throw ParameterError("update_adaptive_var: sample or window length mismatch");
  update_recursive_stats(state.stats, x_t, x_window);
  if (step <= 0.0) {
    PowerIteration local;
    step = adaptive_step_size(state.stats.r, x_window, epsilon, power ? *power : local);
  }

  double scale;
  if (state.gradient == VarGradient::Instantaneous) {
    const Vector err = x_t - state.coeffs * x_window;
    state.coeffs.noalias() += step * err * x_window.transpose();
    scale = x_t.cwiseAbs().maxCoeff() * x_window.cwiseAbs().maxCoeff();
  } else {
    Matrix g = state.coeffs * state.stats.r;
    g -= state.stats.pxy;
    state.coeffs.noalias() -= step * g;
    scale = state.stats.pxy.cwiseAbs().maxCoeff();
  }
  if (!state.coeffs.allFinite()) throw NumericalError("adaptive VAR: coefficients became non-finite");

  const double thr = step * state.sparsity_weight * scale;
  if (thr <= 0.0) return;
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      double norm2 = 0.0;
      for (int p = 0; p < state.order; ++p) norm2 += state.coeffs(i, p * n + j) * state.coeffs(i, p * n + j);
      const double norm = std::sqrt(norm2);
      const double keep = norm > thr ? 1.0 - thr / norm : 0.0;
      for (int p = 0; p < state.order; ++p) state.coeffs(i, p * n + j) *= keep;
    }
}

GraphShiftOperator var_causality_to_gso(const Matrix& coeffs, int order, double tol) {
  if (order < 1 || coeffs.cols() != coeffs.rows() * order)
    throw ParameterError("var_causality_to_gso: coefficients must be N x NP");
  const Index n = coeffs.rows();
  Matrix w = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      bool causal = false;
      double norm2 = 0.0;
      for (int p = 0; p < order; ++p) {
        const double c = coeffs(i, p * n + j);
        causal = causal || std::abs(c) > tol;
        norm2 += c * c;
      }
      if (causal) w(i, j) = std::sqrt(norm2);
    }
  return GraphShiftOperator{Topology::External, w};
}

VarRunResult run_adaptive_var(const SignalStream& stream, int order, double lambda, double sparsity_weight,
                              VarGradient gradient, double tol) {
  const Index n = stream.n();
  AdaptiveVarState state = AdaptiveVarState::make(n, order, lambda, sparsity_weight, gradient);
  PowerIteration power;
  Matrix history = Matrix::Zero(n, order);
  VarRunResult out;
  out.nmse_pred.reserve(stream.length());
  for (long t = 0; t < stream.length(); ++t) {
    const Vector x = stream.samples.col(t);
    const Vector window = Eigen::Map<const Vector>(history.data(), history.size());
    const double xn = x.squaredNorm();
    out.nmse_pred.push_back(xn > 0.0 ? (x - state.coeffs * window).squaredNorm() / xn
                                     : std::numeric_limits<double>::quiet_NaN());
    try {
      update_adaptive_var(state, x, window, 0.0, &power);
    } catch (const NumericalError& e) {
      throw DivergenceError(e.what(), t + 1);
    }
    for (Index k = order - 1; k > 0; --k) history.col(k) = history.col(k - 1);
    history.col(0) = x;
  }
  out.coeffs = state.coeffs;
  out.w = var_causality_to_gso(state.coeffs, order, tol).weights;
  return out;
}

}  // namespace adacgp
