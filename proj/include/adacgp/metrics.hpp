#pragma once

#include <vector>

#include "adacgp/types.hpp"

namespace adacgp {

/// ||x - pred||^2 / ||x||^2. Throws ParameterError for a zero target.
double nmse_prediction(const Vector& x, const Vector& prediction);

/// ||W_true - W_est||_F^2 / ||W_true||_F^2. Throws for a zero truth.
double nmse_gso(const Matrix& w_true, const Matrix& w_est);

struct EdgeClassificationReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double p_miss = 0.0;
  double p_false_alarm = 0.0;
  long true_nnz = 0;
  long est_nnz = 0;
  long tp = 0, fp = 0, tn = 0, fn = 0;
};

// Off-diagonal entries only; an estimated edge is |w| > tol.
// Empty truth gives recall 1; no predicted edges gives precision 0 unless
// the truth is also empty.
EdgeClassificationReport classify_edges(const Matrix& w_true, const Matrix& w_est, double tol = 0.0);

/// Off-diagonal entries with |w| > tol.
long count_edges(const Matrix& w, double tol = 0.0);

/// Out-strength minus in-strength of `node`.
double out_in_degree(const Matrix& w, Index node);
Vector out_in_degree(const Matrix& w);

/// ||W_t - W_{t-lag}||_F for t = lag .. size-1.
std::vector<double> gso_lag_stability(const std::vector<Matrix>& snapshots, long lag);

double mean(const std::vector<double>& v);
double median(std::vector<double> v);
double stddev(const std::vector<double>& v);  // sample std, 0 for fewer than 2 values

/// Mean of the finite entries among the last `window` values.
double tail_mean(const std::vector<double>& v, long window);

}  // namespace adacgp
