#include "adacgp/graph_models.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include <Eigen/Eigenvalues>

#include "adacgp/csv_io.hpp"

namespace adacgp {
namespace {

constexpr int kMaxRegenerations = 16;
constexpr int kSbmClusters = 10;

// A square matrix is nilpotent exactly when the directed graph of its
// non-zeros has no cycle (self-loops included). Kahn's algorithm.
bool structurally_nilpotent(const Matrix& w) {
  const Index n = w.rows();
  std::vector<int> indegree(n, 0);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (w(i, j) != 0.0) ++indegree[j];
  std::vector<Index> ready;
  for (Index j = 0; j < n; ++j)
    if (indegree[j] == 0) ready.push_back(j);
  Index visited = 0;
  while (!ready.empty()) {
    const Index i = ready.back();
    ready.pop_back();
    ++visited;
    for (Index j = 0; j < n; ++j)
      if (w(i, j) != 0.0 && --indegree[j] == 0) ready.push_back(j);
  }
  return visited == n;
}

Matrix draw_random(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix w(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) w(i, j) = normal(rng);
  w.diagonal().setZero();
  const double w_max = w.cwiseAbs().maxCoeff();
  const double lo = 0.3 * w_max, hi = 0.7 * w_max;
  return w.unaryExpr([&](double v) {
    const double a = std::abs(v);
    return (a >= lo && a <= hi) ? v : 0.0;
  });
}

Matrix draw_erdos_renyi(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix w = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      const double v = normal(rng);
      const double a = std::abs(v);
      if (i != j && a >= 1.6 && a <= 1.8) w(i, j) = std::copysign(a - 1.5, v);
    }
  return w;
}

Matrix draw_k_regular(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> weight(0.5, 1.0);
  const BoolMatrix pattern = ring_lattice_pattern(n);
  Matrix w = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j)
      if (pattern(i, j) && w(i, j) == 0.0) {
        const double v = weight(rng);
        w(i, j) = v;
        w(j, i) = v;
      }
  return w;
}

Matrix draw_sbm(int n, std::mt19937_64& rng) {
  const int size = n / kSbmClusters;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> inter(0.0, 0.04);
  std::exponential_distribution<double> magnitude(2.0);
  Matrix prob(kSbmClusters, kSbmClusters);
  for (int a = 0; a < kSbmClusters; ++a)
    for (int b = 0; b < kSbmClusters; ++b) prob(a, b) = (a == b) ? 0.05 : inter(rng);
  Matrix w = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      if (i == j) continue;
      if (unit(rng) < prob(i / size, j / size)) {
        const double m = magnitude(rng);
        w(i, j) = unit(rng) < 0.5 ? -m : m;
      }
    }
  return w;
}

void validate_size(Topology kind, int n) {
  if (n < 2) throw ParameterError("generate_gso: n must be >= 2, got " + std::to_string(n));
  if (kind == Topology::KRegular && n <= 3)
    throw ParameterError("generate_gso: K-regular graphs need n > 3, got " + std::to_string(n));
  if (kind == Topology::SBM && n % kSbmClusters != 0)
    throw ParameterError("generate_gso: SBM needs n divisible by 10, got " + std::to_string(n));
  if (kind == Topology::External)
    throw ParameterError("generate_gso: External topologies are loaded, not generated");
}

}  // namespace

std::string to_string(Topology kind) {
  switch (kind) {
    case Topology::Random: return "random";
    case Topology::ErdosRenyi: return "erdos-renyi";
    case Topology::KRegular: return "k-regular";
    case Topology::SBM: return "sbm";
    case Topology::External: return "external";
  }
  return "unknown";
}

Topology parse_topology(std::string_view name) {
  if (name == "random" || name == "r") return Topology::Random;
  if (name == "erdos-renyi" || name == "er") return Topology::ErdosRenyi;
  if (name == "k-regular" || name == "kr") return Topology::KRegular;
  if (name == "sbm") return Topology::SBM;
  if (name == "external") return Topology::External;
  throw ParameterError("unknown topology '" + std::string(name) + "'");
}

double normalization_factor(Topology kind) {
  switch (kind) {
    case Topology::Random:
    case Topology::ErdosRenyi: return 1.5;
    case Topology::KRegular:
    case Topology::SBM: return 1.1;
    case Topology::External: break;
  }
  throw ParameterError("no normalisation factor for external topologies");
}

double spectral_radius(const Matrix& w) {
  if (w.rows() != w.cols()) throw ParameterError("spectral_radius: matrix must be square");
  if (w.size() == 0) return 0.0;
  if (structurally_nilpotent(w)) return 0.0;
  Eigen::EigenSolver<Matrix> solver(w, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) throw NumericalError("spectral_radius: eigensolver failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

GraphShiftOperator normalize_spectral(const GraphShiftOperator& w, double factor) {
  if (!(factor > 1.0)) throw ParameterError("normalize_spectral: factor must be > 1");
  const double rho = spectral_radius(w.weights);
  if (rho == 0.0)
    throw ParameterError("normalize_spectral: spectral radius is zero (zero or nilpotent matrix)");
  GraphShiftOperator out = w;
  out.weights /= factor * rho;
  return out;
}

BoolMatrix ring_lattice_pattern(int n) {
  if (n <= 3) throw ParameterError("ring_lattice_pattern: n must be > 3");
  BoolMatrix p = BoolMatrix::Constant(n, n, false);
  for (int i = 0; i < n; ++i) {
    p(i, (i + 1) % n) = true;
    p(i, (i + n - 1) % n) = true;
    p(i, (i + 2) % n) = true;
  }
  return p;
}

BoolMatrix support_of(const Matrix& m, double tol, bool include_diagonal) {
  BoolMatrix s = (m.array().abs() > tol).matrix();
  if (!include_diagonal) s.diagonal().setConstant(false);
  return s;
}

GraphShiftOperator generate_gso(Topology kind, int n, Seed seed) {
  validate_size(kind, n);
  Matrix fallback;
  for (int attempt = 0; attempt < kMaxRegenerations; ++attempt) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    Matrix w;
    switch (kind) {
      case Topology::Random: w = draw_random(n, rng); break;
      case Topology::ErdosRenyi: w = draw_erdos_renyi(n, rng); break;
      case Topology::KRegular: w = draw_k_regular(n, rng); break;
      case Topology::SBM: w = draw_sbm(n, rng); break;
      case Topology::External: break;
    }
    if (w.isZero(0.0)) continue;
    if (structurally_nilpotent(w)) {
      if (fallback.size() == 0) fallback = w;
      continue;
    }
    return normalize_spectral(GraphShiftOperator{kind, std::move(w)}, normalization_factor(kind));
  }
  if (fallback.size() == 0)
    throw ParameterError("generate_gso: every draw was empty after " +
                         std::to_string(kMaxRegenerations) + " attempts");
  // Nilpotent: the spectral radius is zero, so bound the operator norm instead.
  Eigen::JacobiSVD<Matrix> svd(fallback);
  fallback /= normalization_factor(kind) * svd.singularValues()(0);
  return GraphShiftOperator{kind, std::move(fallback)};
}

void write_gso_csv(std::ostream& os, const Matrix& w) {
  os << w.rows() << '\n';
  const Matrix::Index n = w.rows();
  std::vector<double> row(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < w.cols(); ++j) row[j] = w(i, j);
    csv::write_row(os, row.data(), w.cols());
  }
}

Matrix read_gso_csv(std::istream& is) {
  std::string header;
  long lineno = 0;
  while (std::getline(is, header)) {
    ++lineno;
    if (!header.empty() && header[0] != '#' && header != "\r") break;
  }
  const std::string where = "gso:" + std::to_string(lineno);
  const auto cells = csv::split(header);
  if (lineno == 0 || cells.size() != 1 || cells[0].empty())
    throw ParseError(where + ": expected header with node count");
  const long n = csv::parse_long(cells[0], where);
  if (n <= 0) throw ParseError(where + ": node count must be positive");
  // Pad with the consumed lines so reported line numbers match the file.
  std::stringstream rest;
  rest << std::string(lineno, '\n') << is.rdbuf();
  const csv::Table t = csv::read_table(rest, "gso");
  if (static_cast<long>(t.rows.size()) != n)
    throw ParseError("gso: expected " + std::to_string(n) + " rows, found " +
                     std::to_string(t.rows.size()));
  Matrix w(n, n);
  for (long i = 0; i < n; ++i) {
    if (static_cast<long>(t.rows[i].size()) != n)
      throw ParseError("gso:" + std::to_string(t.line_numbers[i]) + ": expected " +
                       std::to_string(n) + " columns");
    for (long j = 0; j < n; ++j) w(i, j) = t.rows[i][j];
  }
  return w;
}

void write_gso_triplets(std::ostream& os, const Matrix& w) {
  os << w.rows() << '\n';
  for (Index i = 0; i < w.rows(); ++i)
    for (Index j = 0; j < w.cols(); ++j)
      if (w(i, j) != 0.0)
        os << i << ',' << j << ',' << csv::format_double(w(i, j)) << '\n';
}

Matrix read_gso_triplets(std::istream& is) {
  std::string line;
  long lineno = 0;
  long n = -1;
  Matrix w;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#' || line == "\r") continue;
    const std::string where = "triplets:" + std::to_string(lineno);
    const auto cells = csv::split(line);
    if (n < 0) {
      if (cells.size() != 1) throw ParseError(where + ": expected header with node count");
      n = csv::parse_long(cells[0], where);
      if (n <= 0) throw ParseError(where + ": node count must be positive");
      w = Matrix::Zero(n, n);
      continue;
    }
    if (cells.size() != 3) throw ParseError(where + ": expected i,j,w");
    const long i = csv::parse_long(cells[0], where);
    const long j = csv::parse_long(cells[1], where);
    if (i < 0 || j < 0 || i >= n || j >= n) throw ParseError(where + ": index out of range");
    w(i, j) = csv::parse_double(cells[2], where);
  }
  if (n < 0) throw ParseError("triplets: empty file");
  return w;
}

void write_gso_csv(const std::string& path, const Matrix& w) {
  std::ofstream os(path);
  if (!os) throw ParameterError("cannot write " + path);
  write_gso_csv(os, w);
}

Matrix read_gso_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ParameterError("cannot read " + path);
  return read_gso_csv(is);
}

}  // namespace adacgp
