#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "adacgp/types.hpp"

namespace adacgp {

struct ScalingRow {
  std::string algorithm;
  int n = 0;
  double seconds_per_iter = 0.0;  // median over repetitions
  long inner_iters = 0;
};

struct ScalingReport {
  std::vector<ScalingRow> rows;
  std::vector<std::string> algorithms;
  std::vector<double> exponents;  // NaN when fewer than two sizes fall in the fitted half
};

/// Least-squares slope of log(seconds) against log(n) over the largest half
/// of the sizes (ceil(k / 2) of k sizes).
double fit_scaling_exponent(const std::vector<int>& sizes, const std::vector<double>& seconds);

/// Per-iteration wall time of AdaCGP (both paths, fixed steps, debiasing
/// excluded), the adaptive VAR baseline and a dense matrix product control,
/// on Random graphs with P = 3. Inner loops grow until one timed block lasts
/// at least `min_seconds`.
ScalingReport benchmark_complexity(const std::vector<int>& sizes, int reps, double min_seconds = 0.01,
                                   Seed seed = 1);

void write_scaling_csv(std::ostream& os, const ScalingReport& r);

}  // namespace adacgp
