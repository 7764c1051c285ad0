#pragma once

#include <optional>

#include "adacgp/types.hpp"

namespace adacgp {

/// Concatenated lag filters [Psi_1 ... Psi_P] (N x NP) held as a
/// non-negative split pair so the l1 penalty becomes linear.
struct FilterBank {
  int order = 0;
  Matrix pos;
  Matrix neg;

  static FilterBank zeros(Index n, int order);
  /// Splits a signed matrix into its positive and negative parts.
  static FilterBank from_value(const Matrix& value, int order);

  Index n() const { return pos.rows(); }
  Matrix value() const { return pos - neg; }
  // Block p is 1-based: columns [(p-1)N, pN).
  Matrix block(int p) const { return pos.middleCols((p - 1) * n(), n()) - neg.middleCols((p - 1) * n(), n()); }
};

/// W = pos - neg with both parts non-negative.
struct SplitGSO {
  Matrix pos;
  Matrix neg;

  static SplitGSO zeros(Index n);
  static SplitGSO from_value(const Matrix& value);
  Matrix value() const { return pos - neg; }
};

/// Exponentially weighted second-order statistics shared by the filter and
/// coefficient stages.
struct RecursiveStats {
  double lambda = 1.0;
  Matrix r;    // NP x NP, lagged-input autocorrelation
  Matrix pxy;  // N x NP, cross-correlation between x_t and the lag window
  Matrix c;    // M x M, for the accumulated coefficient update
  Vector u;    // M

  static RecursiveStats zeros(Index n, int order, double lambda);
};

/// R <- lambda R + x_w x_w^T ; Pxy <- lambda Pxy + x_t x_w^T.
void update_recursive_stats(RecursiveStats& stats, const Vector& x_t, const Vector& x_window);

/// [A, B] = AB - BA.
Matrix commutator(const Matrix& a, const Matrix& b);

/// 0.5 * sum_{i<j} ||[Psi_i, Psi_j]||_F^2. Its gradient with respect to
/// block p is Q_p below.
double psi_commutator_penalty(const Matrix& psi, int order);

/// Q_p = sum_{k != p} ([Psi_p, Psi_k] Psi_k^T - Psi_k^T [Psi_p, Psi_k]).
Matrix psi_commutator_gradient(const Matrix& psi, int order);

/// G = Psi R - (Pxy - gamma Q). Entries that the edge mask forbids (applied
/// per block) are zeroed.
Matrix psi_gradient(const Matrix& psi, const RecursiveStats& stats, double gamma, const Matrix& q,
                    const BoolMatrix* mask = nullptr);

/// Least-squares part of the filter objective,
/// 0.5 tr(Psi R Psi^T) - tr(Pxy Psi^T); plus gamma times the commutator penalty.
double psi_objective(const Matrix& psi, const RecursiveStats& stats, double gamma, int order);

/// Projected gradient step on the split pair:
///   pos <- max(0, pos - (M + G) A),  neg <- max(0, neg - (M - G) A)
/// with M block-constant mu_t(p) and A = diag(steps(p)) per block.
void update_psi_split(FilterBank& psi, const Matrix& g, const Vector& mu_t, const Vector& steps,
                      const BoolMatrix* mask = nullptr);

/// 0.5 * sum_{k>=2} ||[W, Psi_k]||_F^2.
double w_commutator_penalty(const Matrix& w, const Matrix& psi, int order);

/// S = sum_{k=2}^{P} ([W, Psi_k] Psi_k^T - Psi_k^T [W, Psi_k]); zero for P = 1.
Matrix w_commutator_gradient(const Matrix& w, const Matrix& psi, int order);

/// 0.5 ||Psi_1 - W||^2 + gamma * w_commutator_penalty (smooth part).
double w_objective(const Matrix& w, const Matrix& psi, double gamma, int order);

/// V = W - (Psi_1 - gamma S).
Matrix w_path1_direction(const Matrix& w, const Matrix& psi, double gamma, int order);

/// W+ <- max(0, W+ - beta (mu1 + V)),  W- <- max(0, W- - beta (mu1 - V)).
void project_w_split(SplitGSO& w, const Matrix& v, double mu1, double beta,
                     const BoolMatrix* mask = nullptr);

/// Path 1 W update: computes V from the current estimate then projects.
void update_w_path1(SplitGSO& w, const Matrix& psi, double gamma, double mu1, double beta, int order,
                    const BoolMatrix* mask = nullptr);

/// Path 2: W is the first filter block.
Matrix extract_w_path2(const Matrix& psi);

/// Y_t = [x_{t-1}, W x_{t-1}, x_{t-2}, W x_{t-2}, W^2 x_{t-2}, ..., W^P x_{t-P}],
/// N x P(P+3)/2. `history` column k holds x_{t-1-k}.
Matrix build_y_matrix(const Matrix& w, const Matrix& history, int order);

enum class HUpdateMode { Instantaneous, Accumulated };

/// C <- lambda C + Y^T Y ;  u <- lambda u + Y^T x_t.
void accumulate_h_stats(RecursiveStats& stats, const Matrix& y, const Vector& x_t);

/// Coefficient step. The smooth part is a gradient step,
///  Instantaneous: z = h + rho Y^T (x_t - Y h)
///  Accumulated:   z = h - rho (C h - u)      (C, u from accumulate_h_stats)
/// followed by the reweighted-l1 shrinkage with weights 1 / (eps + |h_i|):
///   h_i <- sign(z_i) max(0, |z_i| - rho eta_t / (eps + |h_i|)),
/// where coefficients with h_i = 0 are not shrunk (sign(0) = 0).
Vector update_h(const Vector& h, const Matrix& y, const Vector& x_t, double rho, double eta_t,
                double epsilon, HUpdateMode mode, const RecursiveStats& stats);

/// Smooth part of the coefficient objective used for the step-size search.
double h_objective(const Vector& h, const Matrix& y, const Vector& x_t, HUpdateMode mode,
                   const RecursiveStats& stats);
Vector h_gradient(const Vector& h, const Matrix& y, const Vector& x_t, HUpdateMode mode,
                  const RecursiveStats& stats);

/// Unpenalised gradient step restricted to `support`:
///   G = (Psi R - Pxy) on support, 0 elsewhere;  Psi <- Psi - G A.
/// The zero pattern is preserved. Returns false (no-op) for an empty support.
bool debias_step(FilterBank& psi, const BoolMatrix& support, const RecursiveStats& stats,
                 const Vector& steps);

}  // namespace adacgp
