// Step sizes, the Armijo search, sparsity schedules and steady-state detection.

#include <cmath>

#include <Eigen/Eigenvalues>

#include "doctest.h"

#include "adacgp/adaptation.hpp"
#include "test_support.hpp"

using namespace adacgp;

TEST_CASE("adaptive step size by substitution") {
  CHECK(adaptive_step_size(1.0, 1.0, 1e-12) == doctest::Approx(2.0));
  CHECK(adaptive_step_size(4.0, 0.0, 1.0) == doctest::Approx(0.5));
  CHECK(adaptive_step_size(0.0, 1.0, 1e-8) == 1e-3);
  CHECK(adaptive_step_size(0.0, 1.0, 1e-8, 0.25) == 0.25);
  CHECK_THROWS_AS(adaptive_step_size(1.0, 1.0, 0.0), ParameterError);

  PowerIteration power;
  CHECK(adaptive_step_size(Matrix::Zero(3, 3), Vector::Ones(3), 1e-8, power) == 1e-3);
  CHECK(adaptive_step_size(Matrix::Identity(3, 3), Vector::Unit(3, 0), 1e-12, power) == doctest::Approx(2.0));
}

TEST_CASE("adaptive step size decreases with the window energy") {
  double prev = INFINITY;
  for (double e : {0.0, 0.1, 1.0, 10.0, 100.0}) {
    const double a = adaptive_step_size(3.0, e, 1e-8);
    CHECK(a > 0.0);
    CHECK(a < prev);
    prev = a;
  }
}

TEST_CASE("power iteration against a dense eigensolver") {
  std::mt19937_64 rng(1);
  for (int c = 0; c < 20; ++c) {
    const Matrix a = testing::random_matrix(rng, 6, 6);
    const Matrix r = a * a.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(r);
    const double lmax = es.eigenvalues().maxCoeff();
    // Eight iterations per call; warm starts accumulate across calls.
    PowerIteration power;
    double est = 0.0;
    for (int k = 0; k < 50; ++k) est = power.largest_eigenvalue(r);
    CHECK(est == doctest::Approx(lmax).epsilon(1e-6));
    const Vector x = testing::random_vector(rng, 6);
    CHECK(adaptive_step_size(r, x, 1e-8, power) ==
          doctest::Approx(2.0 / lmax / (x.squaredNorm() + 1e-8)).epsilon(1e-6));
  }
}

TEST_CASE("power iteration warm start tracks a slowly changing matrix") {
  std::mt19937_64 rng(2);
  Matrix r = Matrix::Zero(8, 8);
  PowerIteration power;
  for (int t = 0; t < 400; ++t) {
    const Vector x = testing::random_vector(rng, 8);
    r = 0.98 * r + x * x.transpose();
    const double est = power.largest_eigenvalue(r);
    // The Rayleigh quotient never exceeds the top eigenvalue; eight warm
    // iterations keep it within 20% on this isotropic (small-gap) stream.
    if (t > 50) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(r);
      const double lmax = es.eigenvalues().maxCoeff();
      CHECK(est <= lmax * (1 + 1e-12));
      CHECK(est >= 0.8 * lmax);
    }
  }
}

TEST_CASE("Armijo search") {
  auto quad = [](const Vector& x) { return 0.5 * x.squaredNorm(); };
  SUBCASE("accepts the initial step on a quadratic") {
    const Vector x = Vector::Ones(1);
    const auto r = armijo_step(quad, x, x, 1.0);
    CHECK(r.step == 1.0);
    CHECK_FALSE(r.warning);
  }
  SUBCASE("zero gradient returns the initial step") {
    const auto r = armijo_step(quad, Vector(Vector::Zero(2)), Vector(Vector::Ones(2)), 0.7);
    CHECK(r.step == 0.7);
    CHECK_FALSE(r.warning);
  }
  SUBCASE("wrong gradient sign yields the minimum step and a warning") {
    const Vector x = Vector::Ones(1);
    ArmijoParams p;
    const auto r = armijo_step(quad, Vector(-x), x, 1.0, p);
    CHECK(r.warning);
    CHECK(r.step == doctest::Approx(std::pow(p.ratio, p.max_backtracks)));
  }
  SUBCASE("backtracks to a step satisfying sufficient decrease") {
    auto f = [](const Vector& x) { return 5.0 * x.squaredNorm(); };
    const Vector x = Vector::Ones(3);
    const Vector g = 10.0 * x;
    const auto r = armijo_step(f, g, x, 1.0);
    CHECK_FALSE(r.warning);
    CHECK(r.backtracks > 0);
    CHECK(f(x - r.step * g) <= f(x) - 1e-4 * r.step * g.squaredNorm());
    // The previous, larger step must fail the test.
    const double bigger = r.step * 2.0;
    CHECK(f(x - bigger * g) > f(x) - 1e-4 * bigger * g.squaredNorm());
  }
  SUBCASE("non-positive initial step") {
    CHECK_THROWS_AS(armijo_step(quad, Vector(Vector::Ones(1)), Vector(Vector::Ones(1)), 0.0), ParameterError);
  }
}

TEST_CASE("sparsity schedules") {
  std::mt19937_64 rng(3);
  CHECK(sparsity_schedule(Matrix::Zero(3, 3), Matrix::Zero(3, 3), 0.5, 0.1) == 0.0);
  Matrix p = Matrix::Zero(2, 2);
  p(1, 0) = -2.0;
  CHECK(sparsity_schedule(p, Matrix::Zero(2, 2), 0.0, 0.1) == doctest::Approx(0.2));
  CHECK(sparsity_schedule(p, 0.1) == doctest::Approx(0.2));
  for (int c = 0; c < 10; ++c) {
    const Matrix a = testing::random_matrix(rng, 4, 4), q = testing::random_matrix(rng, 4, 4);
    double scan = 0.0;
    for (Index i = 0; i < 4; ++i)
      for (Index j = 0; j < 4; ++j) scan = std::max(scan, std::abs(a(i, j) - 0.3 * q(i, j)));
    CHECK(sparsity_schedule(a, q, 0.3, 0.5) == doctest::Approx(0.5 * scan));
  }
  const Matrix y = testing::random_matrix(rng, 4, 5);
  const Vector x = testing::random_vector(rng, 4);
  CHECK(h_sparsity_schedule(y, x, 0.1) == doctest::Approx(0.1 * (y.transpose() * x).cwiseAbs().maxCoeff()));
  CHECK_THROWS_AS(sparsity_schedule(Matrix::Zero(2, 2), Matrix::Zero(2, 3), 0.1, 0.1), ParameterError);
}

TEST_CASE("steady-state detector") {
  SUBCASE("constant sequence fires at patience + 1") {
    SteadyStateDetector d;
    long fired_at = -1;
    for (long t = 1; t <= 2000 && fired_at < 0; ++t)
      if (d.update(0.5)) fired_at = t;
    CHECK(fired_at == d.params().patience + 1);
  }
  SUBCASE("2% decay per step never fires") {
    SteadyStateDetector d({0.0, 500, 0.01});
    double v = 1.0;
    bool fired = false;
    for (int t = 0; t < 3000; ++t) {
      fired = fired || d.update(v);
      v *= 0.98;
    }
    CHECK_FALSE(fired);
  }
  SUBCASE("EMA seeded with the first observation") {
    SteadyStateDetector d;
    d.update(3.0);
    CHECK(d.ema() == 3.0);
    d.update(1.0);
    CHECK(d.ema() == doctest::Approx(0.995 * 3.0 + 0.005 * 1.0));
  }
  SUBCASE("improving steps delay firing by their count") {
    DetectorParams p{0.0, 50, 0.01};
    SteadyStateDetector a(p), b(p);
    long fa = -1, fb = -1;
    for (long t = 1; t <= 500 && fa < 0; ++t)
      if (a.update(1.0)) fa = t;
    // b improves for 10 extra steps before going flat.
    double v = 1.0;
    long t = 0;
    for (int k = 0; k < 10; ++k) {
      ++t;
      b.update(v);
      v *= 0.9;
    }
    while (fb < 0 && t < 1000) {
      ++t;
      if (b.update(v)) fb = t;
    }
    CHECK(fb == fa + 10);
  }
  SUBCASE("invalid observations") {
    SteadyStateDetector d;
    CHECK_THROWS_AS(d.update(NAN), ParameterError);
    CHECK_THROWS_AS(d.update(-1.0), ParameterError);
    d.update(1.0);
    d.reset();
    CHECK(d.observations() == 0);
  }
}
