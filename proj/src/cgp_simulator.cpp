#include "adacgp/cgp_simulator.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <random>

#include "adacgp/csv_io.hpp"
#include "adacgp/graph_models.hpp"
#include "adacgp/logging.hpp"

namespace adacgp {
namespace {

constexpr double kDivergenceBound = 1e12;

}  // namespace

FilterCoeffs FilterCoeffs::zeros(int order) {
  if (order < 1) throw ParameterError("filter order must be >= 1");
  return FilterCoeffs{order, Vector::Zero(size_for(order))};
}

void FilterCoeffs::validate() const {
  if (order < 1) throw ParameterError("filter order must be >= 1");
  if (values.size() != size_for(order))
    throw ParameterError("filter coefficients: expected length " + std::to_string(size_for(order)) +
                         " for order " + std::to_string(order) + ", got " +
                         std::to_string(values.size()));
}

FilterCoeffs generate_filter_coeffs(int order, Seed seed, FirstLag first) {
  FilterCoeffs h = FilterCoeffs::zeros(order);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> magnitude(0.45, 1.0);
  std::bernoulli_distribution negative(0.5);
  for (int p = 1; p <= order; ++p) {
    for (int j = 0; j <= p; ++j) {
      double v = magnitude(rng);
      if (negative(rng)) v = -v;
      h.values(FilterCoeffs::offset(p) + j) = v / std::ldexp(1.0, p + j) / 1.5;
    }
  }
  if (first == FirstLag::Identifiable) {
    h.values(0) = 0.0;
    h.values(1) = 1.0;
  }
  return h;
}

Vector apply_graph_filter(const Matrix& w, const Vector& h_block, const Vector& x) {
  if (w.rows() != w.cols()) throw ParameterError("apply_graph_filter: W must be square");
  if (x.size() != w.rows()) throw ParameterError("apply_graph_filter: signal length mismatch");
  if (h_block.size() == 0) throw ParameterError("apply_graph_filter: empty coefficient block");
  Vector shifted = x;
  Vector out = h_block(0) * x;
  for (Index l = 1; l < h_block.size(); ++l) {
    shifted = w * shifted;
    out.noalias() += h_block(l) * shifted;
  }
  return out;
}

SignalStream simulate_cgp_piecewise(const std::vector<Matrix>& gsos, const std::vector<long>& lengths,
                                    const FilterCoeffs& h, long burn_in, Seed seed) {
  h.validate();
  if (gsos.empty() || gsos.size() != lengths.size())
    throw ParameterError("simulate_cgp: need one length per GSO");
  if (burn_in < 0) throw ParameterError("simulate_cgp: burn_in must be >= 0");
  const Index n = gsos.front().rows();
  long total = 0;
  for (std::size_t k = 0; k < gsos.size(); ++k) {
    if (gsos[k].rows() != n || gsos[k].cols() != n)
      throw ParameterError("simulate_cgp: every GSO must be n x n");
    if (lengths[k] <= 0) throw ParameterError("simulate_cgp: segment lengths must be positive");
    total += lengths[k];
    const double rho = spectral_radius(gsos[k]);
    if (rho >= 1.0)
      log::warn("simulate_cgp: spectral radius " + std::to_string(rho) + " >= 1, process may diverge");
  }

  const int order = h.order;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Circular buffer of the last `order` samples; past[k] = x_{t-1-k}.
  std::vector<Vector> past(order, Vector::Zero(n));
  std::vector<Vector> blocks;
  for (int p = 1; p <= order; ++p) blocks.push_back(h.block(p));

  SignalStream out;
  out.burn_in = burn_in;
  out.samples.resize(n, total);

  std::size_t segment = 0;
  long in_segment = 0;
  const long steps = burn_in + total;
  Vector x(n);
  for (long t = 0; t < steps; ++t) {
    const bool retained = t >= burn_in;
    if (retained && in_segment == lengths[segment]) {
      ++segment;
      in_segment = 0;
    }
    const Matrix& w = gsos[segment];
    for (Index i = 0; i < n; ++i) x(i) = normal(rng);
    for (int p = 0; p < order; ++p) x.noalias() += apply_graph_filter(w, blocks[p], past[p]);
    if (!(x.cwiseAbs().maxCoeff() <= kDivergenceBound))
      throw DivergenceError("simulate_cgp: signal exceeded 1e12", t);
    for (int p = order - 1; p > 0; --p) std::swap(past[p], past[p - 1]);
    past[0] = x;
    if (retained) {
      out.samples.col(t - burn_in) = x;
      ++in_segment;
    }
  }
  return out;
}

SignalStream simulate_cgp(const Matrix& w, const FilterCoeffs& h, long T, long burn_in, Seed seed) {
  if (T <= 0) throw ParameterError("simulate_cgp: T must be positive");
  return simulate_cgp_piecewise({w}, {T}, h, burn_in, seed);
}

void write_stream_csv(std::ostream& os, const SignalStream& s, const std::string& comment) {
  if (!comment.empty()) os << "# " << comment << '\n';
  for (Index t = 0; t < s.length(); ++t) {
    const Vector col = s.samples.col(t);
    csv::write_row(os, col.data(), col.size());
  }
}

SignalStream read_stream_csv(std::istream& is, const std::string& source) {
  const csv::Table t = csv::read_table(is, source);
  if (t.rows.empty()) throw ParseError(source + ": no samples");
  SignalStream s;
  const Index n = static_cast<Index>(t.rows.front().size());
  s.samples.resize(n, static_cast<Index>(t.rows.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (Index i = 0; i < n; ++i) s.samples(i, static_cast<Index>(r)) = t.rows[r][i];
  return s;
}

}  // namespace adacgp
