#include "adacgp/estimator_ops.hpp"

#include <cmath>
#include <string>

#include "adacgp/cgp_simulator.hpp"

namespace adacgp {
namespace {

void require(bool ok, const char* msg) {
  if (!ok) throw ParameterError(msg);
}

void check_bank_shape(const Matrix& psi, int order) {
  require(order >= 1, "filter order must be >= 1");
  require(psi.cols() == psi.rows() * order, "filter bank must be N x NP");
}

auto block_of(const Matrix& psi, int p) { return psi.middleCols((p - 1) * psi.rows(), psi.rows()); }

// Zeroes the entries of every N x N block that the mask forbids.
void apply_block_mask(Matrix& m, const BoolMatrix& mask) {
  const Index n = m.rows();
  require(mask.rows() == n && mask.cols() == n, "edge mask must be N x N");
  for (Index b = 0; b < m.cols() / n; ++b) {
    auto blk = m.middleCols(b * n, n);
    blk = mask.select(blk, 0.0);
  }
}

}  // namespace

FilterBank FilterBank::zeros(Index n, int order) {
  require(order >= 1, "filter order must be >= 1");
  return FilterBank{order, Matrix::Zero(n, n * order), Matrix::Zero(n, n * order)};
}

FilterBank FilterBank::from_value(const Matrix& value, int order) {
  check_bank_shape(value, order);
  return FilterBank{order, value.cwiseMax(0.0), (-value).cwiseMax(0.0)};
}

SplitGSO SplitGSO::zeros(Index n) { return SplitGSO{Matrix::Zero(n, n), Matrix::Zero(n, n)}; }

SplitGSO SplitGSO::from_value(const Matrix& value) {
  return SplitGSO{value.cwiseMax(0.0), (-value).cwiseMax(0.0)};
}

RecursiveStats RecursiveStats::zeros(Index n, int order, double lambda) {
  require(lambda > 0.0 && lambda <= 1.0, "forgetting factor must lie in (0, 1]");
  const Index np = n * order;
  const Index m = FilterCoeffs::size_for(order);
  return RecursiveStats{lambda, Matrix::Zero(np, np), Matrix::Zero(n, np), Matrix::Zero(m, m),
                        Vector::Zero(m)};
}

void update_recursive_stats(RecursiveStats& stats, const Vector& x_t, const Vector& x_window) {
  require(stats.r.rows() == x_window.size() && stats.r.cols() == x_window.size(),
          "update_recursive_stats: window length does not match R");
  require(stats.pxy.rows() == x_t.size() && stats.pxy.cols() == x_window.size(),
          "update_recursive_stats: sample length does not match Pxy");
  stats.r *= stats.lambda;
  stats.r.noalias() += x_window * x_window.transpose();
  stats.pxy *= stats.lambda;
  stats.pxy.noalias() += x_t * x_window.transpose();
}

Matrix commutator(const Matrix& a, const Matrix& b) {
  require(a.rows() == a.cols() && b.rows() == b.cols() && a.rows() == b.rows(),
          "commutator: operands must be square with equal size");
  Matrix c = a * b;
  c.noalias() -= b * a;
  return c;
}

double psi_commutator_penalty(const Matrix& psi, int order) {
  check_bank_shape(psi, order);
  double total = 0.0;
  for (int i = 1; i <= order; ++i)
    for (int j = i + 1; j <= order; ++j)
      total += 0.5 * commutator(block_of(psi, i), block_of(psi, j)).squaredNorm();
  return total;
}

Matrix psi_commutator_gradient(const Matrix& psi, int order) {
  check_bank_shape(psi, order);
  const Index n = psi.rows();
  Matrix q = Matrix::Zero(n, n * order);
  for (int p = 1; p <= order; ++p) {
    auto qp = q.middleCols((p - 1) * n, n);
    const Matrix psi_p = block_of(psi, p);
    for (int k = 1; k <= order; ++k) {
      if (k == p) continue;
      const Matrix psi_k = block_of(psi, k);
      const Matrix c = commutator(psi_p, psi_k);
      qp.noalias() += c * psi_k.transpose();
      qp.noalias() -= psi_k.transpose() * c;
    }
  }
  return q;
}

Matrix psi_gradient(const Matrix& psi, const RecursiveStats& stats, double gamma, const Matrix& q,
                    const BoolMatrix* mask) {
  require(psi.cols() == stats.r.rows() && psi.rows() == stats.pxy.rows(),
          "psi_gradient: filter bank does not match statistics");
  Matrix g = psi * stats.r;
  g -= stats.pxy;
  if (gamma != 0.0 && q.size() != 0) {
    require(q.rows() == g.rows() && q.cols() == g.cols(), "psi_gradient: Q shape mismatch");
    g.noalias() += gamma * q;
  }
  if (mask) apply_block_mask(g, *mask);
  return g;
}

double psi_objective(const Matrix& psi, const RecursiveStats& stats, double gamma, int order) {
  const double quad = 0.5 * (psi * stats.r).cwiseProduct(psi).sum();
  const double lin = stats.pxy.cwiseProduct(psi).sum();
  double total = quad - lin;
  if (gamma != 0.0) total += gamma * psi_commutator_penalty(psi, order);
  return total;
}

void update_psi_split(FilterBank& psi, const Matrix& g, const Vector& mu_t, const Vector& steps,
                      const BoolMatrix* mask) {
  const Index n = psi.n();
  const int order = psi.order;
  require(g.rows() == n && g.cols() == n * order, "update_psi_split: gradient shape mismatch");
  require(mu_t.size() == order && steps.size() == order, "update_psi_split: need one mu and step per block");
  if (!g.allFinite()) throw NumericalError("update_psi_split: non-finite gradient");
  for (int p = 0; p < order; ++p) {
    const auto gb = g.middleCols(p * n, n);
    auto pos = psi.pos.middleCols(p * n, n);
    auto neg = psi.neg.middleCols(p * n, n);
    pos = (pos.array() - (mu_t(p) + gb.array()) * steps(p)).cwiseMax(0.0);
    neg = (neg.array() - (mu_t(p) - gb.array()) * steps(p)).cwiseMax(0.0);
  }
  if (mask) {
    apply_block_mask(psi.pos, *mask);
    apply_block_mask(psi.neg, *mask);
  }
}

double w_commutator_penalty(const Matrix& w, const Matrix& psi, int order) {
  check_bank_shape(psi, order);
  double total = 0.0;
  for (int k = 2; k <= order; ++k) total += 0.5 * commutator(w, block_of(psi, k)).squaredNorm();
  return total;
}

Matrix w_commutator_gradient(const Matrix& w, const Matrix& psi, int order) {
  check_bank_shape(psi, order);
  require(w.rows() == psi.rows() && w.cols() == psi.rows(), "w_commutator_gradient: W must be N x N");
  Matrix s = Matrix::Zero(w.rows(), w.cols());
  for (int k = 2; k <= order; ++k) {
    const Matrix psi_k = block_of(psi, k);
    const Matrix c = commutator(w, psi_k);
    s.noalias() += c * psi_k.transpose();
    s.noalias() -= psi_k.transpose() * c;
  }
  return s;
}

double w_objective(const Matrix& w, const Matrix& psi, double gamma, int order) {
  double total = 0.5 * (block_of(psi, 1) - w).squaredNorm();
  if (gamma != 0.0) total += gamma * w_commutator_penalty(w, psi, order);
  return total;
}

Matrix w_path1_direction(const Matrix& w, const Matrix& psi, double gamma, int order) {
  Matrix v = w - block_of(psi, 1);
  if (gamma != 0.0 && order >= 2) v.noalias() += gamma * w_commutator_gradient(w, psi, order);
  return v;
}

void project_w_split(SplitGSO& w, const Matrix& v, double mu1, double beta, const BoolMatrix* mask) {
  require(v.rows() == w.pos.rows() && v.cols() == w.pos.cols(), "project_w_split: shape mismatch");
  if (!v.allFinite()) throw NumericalError("update_w_path1: non-finite gradient V");
  w.pos = (w.pos.array() - beta * (mu1 + v.array())).cwiseMax(0.0);
  w.neg = (w.neg.array() - beta * (mu1 - v.array())).cwiseMax(0.0);
  if (mask) {
    w.pos = mask->select(w.pos, 0.0);
    w.neg = mask->select(w.neg, 0.0);
  }
}

void update_w_path1(SplitGSO& w, const Matrix& psi, double gamma, double mu1, double beta, int order,
                    const BoolMatrix* mask) {
  const Matrix v = w_path1_direction(w.value(), psi, gamma, order);
  project_w_split(w, v, mu1, beta, mask);
}

Matrix extract_w_path2(const Matrix& psi) {
  require(psi.rows() > 0 && psi.cols() >= psi.rows(), "extract_w_path2: empty filter bank");
  return psi.leftCols(psi.rows());
}

Matrix build_y_matrix(const Matrix& w, const Matrix& history, int order) {
  const Index n = w.rows();
  require(w.cols() == n, "build_y_matrix: W must be square");
  require(history.rows() == n && history.cols() == order, "build_y_matrix: history must be N x P");
  Matrix y(n, FilterCoeffs::size_for(order));
  for (int p = 1; p <= order; ++p) {
    const Index off = FilterCoeffs::offset(p);
    y.col(off) = history.col(p - 1);
    for (int j = 1; j <= p; ++j) y.col(off + j).noalias() = w * y.col(off + j - 1);
  }
  return y;
}

void accumulate_h_stats(RecursiveStats& stats, const Matrix& y, const Vector& x_t) {
  require(stats.c.rows() == y.cols() && stats.u.size() == y.cols(), "accumulate_h_stats: shape mismatch");
  stats.c *= stats.lambda;
  stats.c.noalias() += y.transpose() * y;
  stats.u *= stats.lambda;
  stats.u.noalias() += y.transpose() * x_t;
}

double h_objective(const Vector& h, const Matrix& y, const Vector& x_t, HUpdateMode mode,
                   const RecursiveStats& stats) {
  if (mode == HUpdateMode::Instantaneous) return 0.5 * (x_t - y * h).squaredNorm();
  return 0.5 * h.dot(stats.c * h) - stats.u.dot(h);
}

Vector h_gradient(const Vector& h, const Matrix& y, const Vector& x_t, HUpdateMode mode,
                  const RecursiveStats& stats) {
  if (mode == HUpdateMode::Instantaneous) return -(y.transpose() * (x_t - y * h));
  return stats.c * h - stats.u;
}

Vector update_h(const Vector& h, const Matrix& y, const Vector& x_t, double rho, double eta_t,
                double epsilon, HUpdateMode mode, const RecursiveStats& stats) {
  require(epsilon > 0.0, "update_h: epsilon must be positive");
  require(y.rows() == x_t.size() && y.cols() == h.size(), "update_h: shape mismatch");
  const Vector z = h - rho * h_gradient(h, y, x_t, mode, stats);
  Vector out(h.size());
  for (Index i = 0; i < h.size(); ++i) {
    if (h(i) == 0.0 || eta_t == 0.0) {
      out(i) = z(i);
      continue;
    }
    const double shrink = rho * eta_t / (epsilon + std::abs(h(i)));
    out(i) = std::abs(z(i)) > shrink ? std::copysign(std::abs(z(i)) - shrink, z(i)) : 0.0;
  }
  if (!out.allFinite()) throw NumericalError("update_h: non-finite coefficients");
  return out;
}

bool debias_step(FilterBank& psi, const BoolMatrix& support, const RecursiveStats& stats,
                 const Vector& steps) {
  const Index n = psi.n();
  const int order = psi.order;
  require(support.rows() == n && support.cols() == n * order, "debias_step: support must be N x NP");
  require(steps.size() == order, "debias_step: need one step per block");
  if (!support.any()) return false;
  const Matrix value = psi.value();
  Matrix g = value * stats.r;
  g -= stats.pxy;
  g = support.select(g, 0.0);
  if (!g.allFinite()) throw NumericalError("debias_step: non-finite gradient");
  Matrix next = value;
  for (int p = 0; p < order; ++p) next.middleCols(p * n, n) -= steps(p) * g.middleCols(p * n, n);
  psi.pos = next.cwiseMax(0.0);
  psi.neg = (-next).cwiseMax(0.0);
  return true;
}

}  // namespace adacgp
