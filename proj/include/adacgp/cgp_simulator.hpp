#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "adacgp/types.hpp"

namespace adacgp {

/// Graph filter coefficients h = (h_{1,0}, h_{1,1}, h_{2,0}, ..., h_{P,P}).
/// Lag block p (1-based) holds the p+1 polynomial coefficients of
/// sum_j h_{p,j} W^j, so the total length is P(P+3)/2.
struct FilterCoeffs {
  int order = 0;
  Vector values;

  static Index size_for(int order) { return static_cast<Index>(order) * (order + 3) / 2; }
  // Offset of block p (1-based) inside `values`.
  static Index offset(int p) { return static_cast<Index>(p - 1) * (p + 2) / 2; }

  double at(int p, int j) const { return values(offset(p) + j); }
  Vector block(int p) const { return values.segment(offset(p), p + 1); }

  static FilterCoeffs zeros(int order);
  void validate() const;
};

/// How the lag-1 block is produced.
///  Identifiable: h_{1,0} = 0, h_{1,1} = 1, so the lag-1 filter is W itself.
///  Sampled: drawn from the same law as the higher lags.
enum class FirstLag { Identifiable, Sampled };

/// Draws 2^{p+j} h_{p,j} from the symmetric mixture
/// 0.5 U(-1,-0.45) + 0.5 U(0.45,1) and divides every drawn value by 1.5.
FilterCoeffs generate_filter_coeffs(int order, Seed seed, FirstLag first = FirstLag::Identifiable);

/// sum_l h_l W^l x, evaluated by repeated shifts (W^l is never formed).
Vector apply_graph_filter(const Matrix& w, const Vector& h_block, const Vector& x);

/// Multivariate time series; column t holds the graph signal x_t.
struct SignalStream {
  Matrix samples;  // n x T
  long burn_in = 0;

  Index n() const { return samples.rows(); }
  Index length() const { return samples.cols(); }
};

/// Causal graph process x_t = sum_p H_p(W, h_p) x_{t-p} + w_t, w_t ~ N(0, I).
/// Pre-sample values are zero; the first `burn_in` generated samples are
/// dropped and exactly T are returned. Throws DivergenceError once any
/// |x| exceeds 1e12.
SignalStream simulate_cgp(const Matrix& w, const FilterCoeffs& h, long T, long burn_in, Seed seed);

/// Piecewise-constant GSO: segment k uses `gsos[k]` for `lengths[k]`
/// retained samples. The recursion state carries across segment borders.
/// Burn-in uses the first GSO.
SignalStream simulate_cgp_piecewise(const std::vector<Matrix>& gsos, const std::vector<long>& lengths,
                                    const FilterCoeffs& h, long burn_in, Seed seed);

// One row per time step, one column per node. An optional leading
// '# comment' line is written when `comment` is non-empty.
void write_stream_csv(std::ostream& os, const SignalStream& s, const std::string& comment = {});
SignalStream read_stream_csv(std::istream& is, const std::string& source = "stream");

}  // namespace adacgp
