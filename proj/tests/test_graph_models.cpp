// Graph generators, spectral normalisation and GSO file formats.

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "doctest.h"

#include "adacgp/graph_models.hpp"
#include "test_support.hpp"

using namespace adacgp;

namespace {

double eig_radius(const Matrix& w) {
  Eigen::EigenSolver<Matrix> es(w, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double off_diagonal_density(const Matrix& w) {
  const Index n = w.rows();
  long nnz = 0;
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (i != j && w(i, j) != 0.0) ++nnz;
  return static_cast<double>(nnz) / static_cast<double>(n * (n - 1));
}

}  // namespace

TEST_CASE("normalize_spectral hits the requested radius") {
  SUBCASE("diagonal-free matrix with radius 2") {
    Matrix w(2, 2);
    w << 0, 2, 2, 0;
    const auto out = normalize_spectral({Topology::External, w}, 1.5);
    CHECK(eig_radius(out.weights) == doctest::Approx(1.0 / 1.5).epsilon(1e-10));
    CHECK(out.weights(0, 1) == doctest::Approx(2.0 / 3.0));
  }
  SUBCASE("antisymmetric 2x2 has eigenvalues +-i") {
    Matrix w(2, 2);
    w << 0, 1, -1, 0;
    const auto out = normalize_spectral({Topology::External, w}, 1.1);
    CHECK(eig_radius(out.weights) == doctest::Approx(1.0 / 1.1).epsilon(1e-10));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(normalize_spectral({Topology::External, Matrix::Zero(3, 3)}, 1.5), ParameterError);
    Matrix nil = Matrix::Zero(3, 3);
    nil(0, 1) = 1.0;
    CHECK_THROWS_AS(normalize_spectral({Topology::External, nil}, 1.5), ParameterError);
    CHECK_THROWS_AS(normalize_spectral({Topology::External, Matrix::Identity(2, 2)}, 1.0), ParameterError);
  }
}

TEST_CASE("generated GSOs are hollow, deterministic and normalised") {
  for (Topology kind : {Topology::Random, Topology::ErdosRenyi, Topology::KRegular, Topology::SBM}) {
    for (Seed s : {1u, 2u, 3u}) {
      const auto g = generate_gso(kind, 50, s);
      CAPTURE(to_string(kind));
      CAPTURE(s);
      REQUIRE(g.n() == 50);
      CHECK(g.weights.diagonal().cwiseAbs().maxCoeff() == 0.0);
      CHECK(eig_radius(g.weights) * normalization_factor(kind) == doctest::Approx(1.0).epsilon(1e-6));
      const auto again = generate_gso(kind, 50, s);
      CHECK(again.weights == g.weights);
    }
  }
  CHECK(generate_gso(Topology::Random, 20, 1).weights != generate_gso(Topology::Random, 20, 2).weights);
}

TEST_CASE("Random GSO at n = 2 uses only off-diagonal slots") {
  for (Seed s = 1; s <= 20; ++s) {
    const auto g = generate_gso(Topology::Random, 2, s);
    CHECK(g.weights.diagonal().cwiseAbs().maxCoeff() == 0.0);
    CHECK(((g.weights.array() != 0.0).count()) <= 2);
  }
}

TEST_CASE("Random GSO keeps the middle magnitude band before scaling") {
  const auto g = generate_gso(Topology::Random, 30, 4);
  const Matrix a = g.weights.cwiseAbs();
  double lo = INFINITY, hi = 0.0;
  for (Index i = 0; i < a.size(); ++i)
    if (a(i) > 0) {
      lo = std::min(lo, a(i));
      hi = std::max(hi, a(i));
    }
  // Kept magnitudes come from [0.3, 0.7] w_max, so their ratio is at most 7/3.
  CHECK(hi / lo <= 7.0 / 3.0 + 1e-12);
}

TEST_CASE("Erdos-Renyi density over 100 seeds") {
  double total = 0.0;
  for (Seed s = 1; s <= 100; ++s) total += off_diagonal_density(generate_gso(Topology::ErdosRenyi, 50, s).weights);
  const double density = total / 100.0;
  CHECK(density >= 0.02);
  CHECK(density <= 0.06);
  CHECK(density == doctest::Approx(0.04).epsilon(0.25));
}

TEST_CASE("K-regular ring lattice has three out-neighbours per node") {
  const BoolMatrix p = ring_lattice_pattern(50);
  for (Index i = 0; i < 50; ++i) {
    CHECK(p.row(i).count() == 3);
    CHECK_FALSE(p(i, i));
  }
  const auto g = generate_gso(Topology::KRegular, 50, 9);
  CHECK(g.weights.isApprox(g.weights.transpose()));
  CHECK_THROWS_AS(ring_lattice_pattern(3), ParameterError);
}

TEST_CASE("SBM intra-cluster edges are denser than inter-cluster edges") {
  const int n = 50, size = n / 10;
  long intra = 0, intra_slots = 0, inter = 0, inter_slots = 0;
  for (Seed s = 1; s <= 100; ++s) {
    const Matrix w = generate_gso(Topology::SBM, n, s).weights;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        const bool same = i / size == j / size;
        (same ? intra_slots : inter_slots) += 1;
        if (w(i, j) != 0.0) (same ? intra : inter) += 1;
      }
  }
  const double p_intra = static_cast<double>(intra) / intra_slots;
  const double p_inter = static_cast<double>(inter) / inter_slots;
  CHECK(p_intra > p_inter);
  CHECK(p_intra == doctest::Approx(0.05).epsilon(0.3));
  CHECK(p_inter == doctest::Approx(0.02).epsilon(0.3));
}

TEST_CASE("generator argument validation") {
  CHECK_THROWS_AS(generate_gso(Topology::Random, 1, 1), ParameterError);
  CHECK_THROWS_AS(generate_gso(Topology::KRegular, 3, 1), ParameterError);
  CHECK_THROWS_AS(generate_gso(Topology::SBM, 45, 1), ParameterError);
  CHECK_THROWS_AS(generate_gso(Topology::External, 10, 1), ParameterError);
  CHECK(parse_topology("er") == Topology::ErdosRenyi);
  CHECK(parse_topology(to_string(Topology::SBM)) == Topology::SBM);
  CHECK_THROWS_AS(parse_topology("torus"), ParameterError);
}

TEST_CASE("GSO CSV and triplet round trips are exact") {
  std::mt19937_64 rng(3);
  Matrix w = testing::random_matrix(rng, 6, 6);
  w(2, 3) = 0.0;
  w(0, 0) = 1.0 / 3.0;
  {
    std::stringstream ss;
    write_gso_csv(ss, w);
    CHECK(read_gso_csv(ss) == w);
  }
  {
    std::stringstream ss;
    write_gso_triplets(ss, w);
    CHECK(read_gso_triplets(ss) == w);
  }
}

TEST_CASE("malformed GSO files report the line") {
  std::stringstream ragged("3\n0,1,0\n1,0\n0,0,0\n");
  try {
    read_gso_csv(ragged);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  std::stringstream short_file("3\n0,1,0\n");
  CHECK_THROWS_AS(read_gso_csv(short_file), ParseError);
  std::stringstream bad_index("2\n0,5,1.0\n");
  CHECK_THROWS_AS(read_gso_triplets(bad_index), ParseError);
}

TEST_CASE("support_of honours tolerance and diagonal flag") {
  Matrix w(2, 2);
  w << 0.5, 1e-3, 0.0, -2.0;
  const BoolMatrix all = support_of(w);
  CHECK(all.count() == 3);
  CHECK(support_of(w, 1e-2).count() == 2);
  CHECK(support_of(w, 0.0, false).count() == 1);
}
