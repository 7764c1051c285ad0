// Adaptive VAR baseline and the causality-to-GSO mapping.

#include <cmath>

#include "doctest.h"

#include "adacgp/baselines.hpp"
#include "adacgp/metrics.hpp"
#include "test_support.hpp"

using namespace adacgp;

TEST_CASE("causality mapping") {
  CHECK(var_causality_to_gso(Matrix::Zero(3, 9), 3).weights.isZero(0));

  Matrix single = Matrix::Zero(3, 6);
  single(1, 3 + 2) = -0.7;  // lag 2, edge (1, 2)
  const Matrix w1 = var_causality_to_gso(single, 2).weights;
  CHECK(w1(1, 2) == doctest::Approx(0.7));
  CHECK(w1.cwiseAbs().sum() == doctest::Approx(0.7));

  Matrix three = Matrix::Zero(5, 15);
  three(3, 4) = 1.0;
  three(3, 5 + 4) = 2.0;
  three(3, 10 + 4) = -2.0;
  CHECK(var_causality_to_gso(three, 3).weights(3, 4) == doctest::Approx(3.0));

  Matrix tiny = Matrix::Zero(2, 2);
  tiny(0, 1) = 1e-12;
  CHECK(var_causality_to_gso(tiny, 1).weights(0, 1) == 0.0);
  CHECK(var_causality_to_gso(tiny, 1, 0.0).weights(0, 1) == doctest::Approx(1e-12));
  CHECK_THROWS_AS(var_causality_to_gso(Matrix::Zero(3, 5), 2), ParameterError);
}

TEST_CASE("causality mapping is non-negative and monotone") {
  std::mt19937_64 rng(1);
  for (int c = 0; c < 20; ++c) {
    Matrix coeffs = testing::random_matrix(rng, 4, 12);
    const Matrix w = var_causality_to_gso(coeffs, 3).weights;
    CHECK((w.array() >= 0.0).all());
    coeffs(1, 4 + 2) *= 1.5;  // grow one lag-2 coefficient of edge (1, 2)
    CHECK(var_causality_to_gso(coeffs, 3).weights(1, 2) >= w(1, 2));
  }
}

TEST_CASE("zero stream keeps zero coefficients") {
  auto s = AdaptiveVarState::make(3, 2, 0.98, 0.1);
  for (int t = 0; t < 50; ++t) update_adaptive_var(s, Vector::Zero(3), Vector::Zero(6), 0.0);
  CHECK(s.coeffs.isZero(0));
  auto r = AdaptiveVarState::make(3, 2, 0.98, 0.1, VarGradient::Recursive);
  for (int t = 0; t < 50; ++t) update_adaptive_var(r, Vector::Zero(3), Vector::Zero(6), 1e-2);
  CHECK(r.coeffs.isZero(0));
}

TEST_CASE("scalar AR(1) without sparsity reaches the least-squares coefficient") {
  const double a = 0.6, lambda = 0.999;
  FilterCoeffs h = FilterCoeffs::zeros(1);
  h.values(0) = a;
  const auto s = simulate_cgp(Matrix::Zero(1, 1), h, 20000, 500, 5);
  const Vector x = s.samples.row(0);
  // A fixed step: the eigenvalue rule is not stable for a single channel.
  for (VarGradient g : {VarGradient::Recursive, VarGradient::Instantaneous}) {
    auto st = AdaptiveVarState::make(1, 1, lambda, 0.0, g);
    double num = 0.0, den = 0.0;
    for (Index t = 1; t < x.size(); ++t) {
      update_adaptive_var(st, x.segment(t, 1), x.segment(t - 1, 1), g == VarGradient::Recursive ? 2e-4 : 2e-3);
      num = lambda * num + x(t) * x(t - 1);
      den = lambda * den + x(t - 1) * x(t - 1);
    }
    const double ls = g == VarGradient::Recursive ? num / den
                                                  : x.head(x.size() - 1).dot(x.tail(x.size() - 1)) /
                                                        x.head(x.size() - 1).squaredNorm();
    CHECK(st.coeffs(0, 0) == doctest::Approx(ls).epsilon(0.05));
  }
}

TEST_CASE("group soft-threshold removes whole lag groups") {
  auto s = AdaptiveVarState::make(2, 2, 1.0, 1.0, VarGradient::Recursive);
  s.coeffs << 0.01, 0.5, 0.01, 0.5, 0.0, 0.0, 0.0, 0.0;
  s.stats.r.setZero();
  s.stats.pxy.setZero();
  s.stats.pxy(1, 0) = 1.0;  // threshold scale 1; pushes (1, 0) to exactly the threshold
  // Threshold 0.05: group (0, 0) has norm 0.014, group (0, 1) norm 0.71.
  update_adaptive_var(s, Vector::Zero(2), Vector::Zero(4), 0.05);
  CHECK(s.coeffs(0, 0) == 0.0);
  CHECK(s.coeffs(0, 2) == 0.0);
  CHECK(s.coeffs(0, 1) != 0.0);
  CHECK(s.coeffs(0, 3) != 0.0);
  CHECK(s.coeffs(1, 0) == 0.0);
  CHECK_THROWS_AS(update_adaptive_var(s, Vector::Zero(3), Vector::Zero(4), 0.1), ParameterError);
  CHECK_THROWS_AS(AdaptiveVarState::make(2, 1, 0.9, -1.0), ParameterError);
}

TEST_CASE("baseline run on a CGP gives a dense causality graph") {
  const Matrix w = generate_gso(Topology::Random, 20, 3).weights;
  const auto s = simulate_cgp(w, generate_filter_coeffs(3, 3), 3000, 200, 3);
  const auto res = run_adaptive_var(s, 3, 0.98, 0.05);
  CHECK(res.nmse_pred.size() == 3000);
  CHECK(std::isnan(res.nmse_pred.front()) == false);
  const auto rep = classify_edges(w, res.w, 1e-9);
  CHECK(rep.recall > 0.9);
  CHECK(rep.p_false_alarm > 0.5);
}
