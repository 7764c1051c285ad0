#pragma once

#include <iosfwd>
#include <string>
#include <string_view>

#include "adacgp/types.hpp"

namespace adacgp {

enum class Topology { Random, ErdosRenyi, KRegular, SBM, External };

std::string to_string(Topology kind);
Topology parse_topology(std::string_view name);

/// Weighted, possibly directed, adjacency-like matrix acting as the graph
/// shift. Generated topologies always have a hollow diagonal.
struct GraphShiftOperator {
  Topology kind = Topology::External;
  Matrix weights;

  Index n() const { return weights.rows(); }
};

/// Spectral normalisation factor used by each synthetic topology
/// (1.5 for Random and Erdos-Renyi, 1.1 for K-regular and SBM).
double normalization_factor(Topology kind);

/// Largest eigenvalue magnitude of a square (non-symmetric) matrix.
double spectral_radius(const Matrix& w);

/// Returns W / (factor * rho(W)). Throws ParameterError for a zero or
/// nilpotent input (rho(W) = 0) and for factor <= 1.
GraphShiftOperator normalize_spectral(const GraphShiftOperator& w, double factor);

/// Builds a ground-truth GSO following the synthetic recipes:
///  - Random: N(0,1) entries kept when |w| lies in [0.3 w_max, 0.7 w_max].
///  - ErdosRenyi: N(0,1) entries kept when |w| in [1.6, 1.8], soft-thresholded by 1.5.
///  - KRegular: ring lattice, 3 nearest neighbours per node, U(0.5, 1) weights,
///    symmetrised.
///  - SBM: 10 equal clusters, intra-cluster edge probability 0.05, one inter
///    probability U(0, 0.04) per ordered cluster pair, Laplace(rate 2) weights.
/// Degenerate draws (all zero, or nilpotent) are regenerated from a derived
/// sub-seed, at most 16 times. A nilpotent draw that survives every retry is
/// scaled by its spectral norm instead, since its spectral radius is zero.
GraphShiftOperator generate_gso(Topology kind, int n, Seed seed);

/// Directed ring-lattice pattern used by KRegular before symmetrisation:
/// node i points at i+1, i-1 and i+2 (mod n). Requires n > 3.
BoolMatrix ring_lattice_pattern(int n);

/// Non-zero pattern of a matrix, optionally ignoring the diagonal.
BoolMatrix support_of(const Matrix& m, double tol = 0.0, bool include_diagonal = true);

// Dense CSV: first line holds n, then n rows of n comma separated values.
void write_gso_csv(std::ostream& os, const Matrix& w);
Matrix read_gso_csv(std::istream& is);
void write_gso_csv(const std::string& path, const Matrix& w);
Matrix read_gso_csv(const std::string& path);

// Sparse triplets: first line holds n, then one "i,j,w" line per non-zero.
void write_gso_triplets(std::ostream& os, const Matrix& w);
Matrix read_gso_triplets(std::istream& is);

}  // namespace adacgp
