#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "adacgp/estimator_ops.hpp"
#include "adacgp/types.hpp"

namespace testing {

using adacgp::Matrix;
using adacgp::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, adacgp::Index rows, adacgp::Index cols, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(rows, cols);
  for (adacgp::Index j = 0; j < cols; ++j)
    for (adacgp::Index i = 0; i < rows; ++i) m(i, j) = d(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, adacgp::Index n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale).col(0);
}

// Central differences, entry by entry.
inline Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  Matrix xp = x;
  for (adacgp::Index j = 0; j < x.cols(); ++j) {
    for (adacgp::Index i = 0; i < x.rows(); ++i) {
      const double v = x(i, j);
      xp(i, j) = v + h;
      const double fp = f(xp);
      xp(i, j) = v - h;
      const double fm = f(xp);
      xp(i, j) = v;
      g(i, j) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

inline double rel_error(const Matrix& got, const Matrix& want) {
  const double scale = std::max(want.cwiseAbs().maxCoeff(), 1e-12);
  return (got - want).cwiseAbs().maxCoeff() / scale;
}

// Reference commutator written out independently of the library.
inline Matrix comm(const Matrix& a, const Matrix& b) { return a * b - b * a; }

struct Samples {
  std::vector<Vector> x, window;
  double lambda;
};

inline Samples random_samples(std::mt19937_64& rng, adacgp::Index n, int order, int count, double lambda) {
  Samples s{{}, {}, lambda};
  for (int k = 0; k < count; ++k) {
    s.x.push_back(random_vector(rng, n));
    s.window.push_back(random_vector(rng, n * order));
  }
  return s;
}

// 0.5 sum_tau lambda^(T - tau) ||x_tau - Psi x_window_tau||^2, summed directly.
inline double ls_objective(const Matrix& psi, const Samples& s) {
  double total = 0.0;
  const int count = static_cast<int>(s.x.size());
  for (int k = 0; k < count; ++k)
    total += 0.5 * std::pow(s.lambda, count - 1 - k) * (s.x[k] - psi * s.window[k]).squaredNorm();
  return total;
}

inline adacgp::RecursiveStats stats_of(const Samples& s, adacgp::Index n, int order) {
  adacgp::RecursiveStats st = adacgp::RecursiveStats::zeros(n, order, s.lambda);
  for (std::size_t k = 0; k < s.x.size(); ++k) adacgp::update_recursive_stats(st, s.x[k], s.window[k]);
  return st;
}

inline Matrix block(const Matrix& psi, int p) { return psi.middleCols((p - 1) * psi.rows(), psi.rows()); }

// 0.5 sum_{i<j} ||[Psi_i, Psi_j]||^2 with the reference commutator.
inline double pairwise_penalty(const Matrix& psi, int order) {
  double total = 0.0;
  for (int i = 1; i <= order; ++i)
    for (int j = i + 1; j <= order; ++j) total += 0.5 * comm(block(psi, i), block(psi, j)).squaredNorm();
  return total;
}

}  // namespace testing
