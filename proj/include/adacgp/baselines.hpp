#pragma once

#include "adacgp/adaptation.hpp"
#include "adacgp/cgp_simulator.hpp"
#include "adacgp/estimator_ops.hpp"
#include "adacgp/graph_models.hpp"
#include "adacgp/types.hpp"

namespace adacgp {

enum class VarGradient {
  Instantaneous,  // gradient of the current squared error only, O(N^2 P) per step
  Recursive       // gradient of the forgetting-factor objective, O(N^3 P^2) per step
};

/// Sparse adaptive VAR: gradient step on the least-squares objective
/// followed by group soft-thresholding of each (i, j) lag vector.
struct AdaptiveVarState {
  int order = 1;
  Matrix coeffs;  // N x NP, lag blocks side by side
  RecursiveStats stats;
  double sparsity_weight = 0.0;
  VarGradient gradient = VarGradient::Instantaneous;

  static AdaptiveVarState make(Index n, int order, double lambda, double sparsity_weight,
                               VarGradient gradient = VarGradient::Instantaneous);
  Index n() const { return coeffs.rows(); }
};

/// One update. The group threshold is step * sparsity_weight * scale with
/// scale = max|x_t x_window^T| (instantaneous) or max|Pxy| (recursive).
/// `step` <= 0 selects the adaptive eigenvalue rule on the recursive R.
void update_adaptive_var(AdaptiveVarState& state, const Vector& x_t, const Vector& x_window, double step,
                         PowerIteration* power = nullptr, double epsilon = 1e-8);

/// W_ij = ||(Psi^(1)_ij, ..., Psi^(P)_ij)||_2 when any lag entry exceeds
/// tol in magnitude, else 0.
GraphShiftOperator var_causality_to_gso(const Matrix& coeffs, int order, double tol = 1e-9);

struct VarRunResult {
  Matrix coeffs;
  Matrix w;
  std::vector<double> nmse_pred;  // one-step prediction error, NaN for x_t = 0
};

/// Runs the baseline over a whole stream with the adaptive step.
VarRunResult run_adaptive_var(const SignalStream& stream, int order, double lambda, double sparsity_weight,
                              VarGradient gradient = VarGradient::Instantaneous, double tol = 1e-9);

}  // namespace adacgp
