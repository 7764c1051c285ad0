#include "adacgp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace adacgp {

double nmse_prediction(const Vector& x, const Vector& prediction) {
  if (x.size() != prediction.size()) throw ParameterError("nmse_prediction: size mismatch");
  const double denom = x.squaredNorm();
  if (denom == 0.0) throw ParameterError("nmse_prediction: zero target");
  return (x - prediction).squaredNorm() / denom;
}

double nmse_gso(const Matrix& w_true, const Matrix& w_est) {
  if (w_true.rows() != w_est.rows() || w_true.cols() != w_est.cols())
    throw ParameterError("nmse_gso: shape mismatch");
  const double denom = w_true.squaredNorm();
  if (denom == 0.0) throw ParameterError("nmse_gso: zero ground truth");
  return (w_true - w_est).squaredNorm() / denom;
}

EdgeClassificationReport classify_edges(const Matrix& w_true, const Matrix& w_est, double tol) {
  if (w_true.rows() != w_est.rows() || w_true.cols() != w_est.cols())
    throw ParameterError("classify_edges: shape mismatch");
  if (tol < 0.0) throw ParameterError("classify_edges: tolerance must be >= 0");
  EdgeClassificationReport r;
  for (Index j = 0; j < w_true.cols(); ++j)
    for (Index i = 0; i < w_true.rows(); ++i) {
      if (i == j) continue;
      const bool t = w_true(i, j) != 0.0;
      const bool e = std::abs(w_est(i, j)) > tol;
      if (t && e) ++r.tp;
      else if (!t && e) ++r.fp;
      else if (t) ++r.fn;
      else ++r.tn;
    }
  r.true_nnz = r.tp + r.fn;
  r.est_nnz = r.tp + r.fp;
  r.recall = r.true_nnz == 0 ? 1.0 : double(r.tp) / double(r.true_nnz);
  if (r.est_nnz == 0)
    r.precision = r.true_nnz == 0 ? 1.0 : 0.0;
  else
    r.precision = double(r.tp) / double(r.est_nnz);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  r.p_miss = 1.0 - r.recall;
  r.p_false_alarm = r.fp + r.tn == 0 ? 0.0 : double(r.fp) / double(r.fp + r.tn);
  return r;
}

long count_edges(const Matrix& w, double tol) {
  long c = 0;
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i < w.rows(); ++i)
      if (i != j && std::abs(w(i, j)) > tol) ++c;
  return c;
}

double out_in_degree(const Matrix& w, Index node) {
  if (w.rows() != w.cols()) throw ParameterError("out_in_degree: W must be square");
  if (node < 0 || node >= w.rows())
    throw ParameterError("out_in_degree: node " + std::to_string(node) + " out of range");
  return w.row(node).sum() - w.col(node).sum();
}

Vector out_in_degree(const Matrix& w) {
  if (w.rows() != w.cols()) throw ParameterError("out_in_degree: W must be square");
  return w.rowwise().sum() - w.colwise().sum().transpose();
}

std::vector<double> gso_lag_stability(const std::vector<Matrix>& snapshots, long lag) {
  if (lag <= 0) throw ParameterError("gso_lag_stability: lag must be positive");
  if (lag >= static_cast<long>(snapshots.size()))
    throw ParameterError("gso_lag_stability: lag " + std::to_string(lag) + " >= number of snapshots " +
                         std::to_string(snapshots.size()));
  std::vector<double> out;
  out.reserve(snapshots.size() - lag);
  for (std::size_t t = lag; t < snapshots.size(); ++t) {
    const Matrix& a = snapshots[t];
    const Matrix& b = snapshots[t - lag];
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ParameterError("gso_lag_stability: shape mismatch");
    out.push_back((a - b).norm());
  }
  return out;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + mid));
  return m;
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / double(v.size() - 1));
}

double tail_mean(const std::vector<double>& v, long window) {
  if (window <= 0) throw ParameterError("tail_mean: window must be positive");
  const std::size_t start = v.size() > std::size_t(window) ? v.size() - window : 0;
  double s = 0.0;
  long c = 0;
  for (std::size_t i = start; i < v.size(); ++i)
    if (std::isfinite(v[i])) {
      s += v[i];
      ++c;
    }
  return c == 0 ? std::numeric_limits<double>::quiet_NaN() : s / double(c);
}

}  // namespace adacgp
