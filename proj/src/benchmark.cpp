#include "adacgp/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <ostream>

#include "adacgp/baselines.hpp"
#include "adacgp/csv_io.hpp"
#include "adacgp/estimator.hpp"
#include "adacgp/graph_models.hpp"
#include "adacgp/metrics.hpp"

namespace adacgp {
namespace {

using Clock = std::chrono::steady_clock;
constexpr int kOrder = 3;

// Median over `reps` blocks of the per-call time of `step`; the block length
// doubles until a block takes at least `min_seconds`.
double time_per_call(const std::function<void()>& step, int reps, double min_seconds, long& inner) {
  inner = 1;
  for (;;) {
    const auto t0 = Clock::now();
    for (long k = 0; k < inner; ++k) step();
    const double dt = std::chrono::duration<double>(Clock::now() - t0).count();
    if (dt >= min_seconds || inner >= (1L << 24)) break;
    inner *= 2;
  }
  std::vector<double> samples;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = Clock::now();
    for (long k = 0; k < inner; ++k) step();
    samples.push_back(std::chrono::duration<double>(Clock::now() - t0).count() / double(inner));
  }
  return median(samples);
}

// Cycles through a pre-generated sample bank so timing excludes data
// generation.
struct SampleBank {
  Matrix x;
  long pos = 0;
  Vector next() {
    const Vector v = x.col(pos);
    pos = (pos + 1) % x.cols();
    return v;
  }
};

}  // namespace

double fit_scaling_exponent(const std::vector<int>& sizes, const std::vector<double>& seconds) {
  if (sizes.size() != seconds.size()) throw ParameterError("fit_scaling_exponent: size mismatch");
  const std::size_t k = sizes.size();
  const std::size_t take = (k + 1) / 2;
  if (take < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = k - take; i < k; ++i) {
    if (sizes[i] <= 0 || !(seconds[i] > 0.0)) throw ParameterError("fit_scaling_exponent: non-positive value");
    const double x = std::log(double(sizes[i])), y = std::log(seconds[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
  }
  const double m = double(take);
  const double den = m * sxx - sx * sx;
  if (den == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return (m * sxy - sx * sy) / den;
}

ScalingReport benchmark_complexity(const std::vector<int>& sizes, int reps, double min_seconds, Seed seed) {
  if (sizes.empty()) throw ParameterError("benchmark: no sizes");
  if (!std::is_sorted(sizes.begin(), sizes.end())) throw ParameterError("benchmark: sizes must be ascending");
  if (reps < 1) throw ParameterError("benchmark: reps must be >= 1");
  if (!(min_seconds > 0.0)) throw ParameterError("benchmark: min_seconds must be positive");

  ScalingReport rep;
  rep.algorithms = {"adacgp-p1", "adacgp-p2", "adaptive-var", "matmul"};
  std::vector<std::vector<double>> times(rep.algorithms.size());

  for (int n : sizes) {
    const auto g = generate_gso(Topology::Random, n, derive_seed(seed, n));
    const auto h = generate_filter_coeffs(kOrder, derive_seed(seed, n + 1));
    const SignalStream s = simulate_cgp(g.weights, h, 64, 100, derive_seed(seed, n + 2));

    for (std::size_t a = 0; a < rep.algorithms.size(); ++a) {
      SampleBank bank{s.samples};
      std::function<void()> step;
      std::unique_ptr<AdaCgpEstimator> est;
      AdaptiveVarState var;
      Matrix history, ma, mb, mc;
      if (a <= 1) {
        EstimatorConfig cfg;
        cfg.path = a == 0 ? Path::Path1 : Path::Path2;
        cfg.debias = false;
        cfg.early_stop = false;
        cfg.psi_step = {StepMode::Fixed, 1e-4};
        cfg.w_step = {StepMode::Fixed, 0.5};
        est = std::make_unique<AdaCgpEstimator>(n, cfg);
        for (int k = 0; k < 2 * kOrder; ++k) est->step(bank.next());
        step = [&] { est->step(bank.next()); };
      } else if (a == 2) {
        var = AdaptiveVarState::make(n, kOrder, 0.98, 0.05);
        history = Matrix::Zero(n, kOrder);
        step = [&] {
          const Vector x = bank.next();
          const Vector w = Eigen::Map<const Vector>(history.data(), history.size());
          update_adaptive_var(var, x, w, 1e-4);
          for (Index k = kOrder - 1; k > 0; --k) history.col(k) = history.col(k - 1);
          history.col(0) = x;
        };
      } else {
        ma = Matrix::Random(n, n);
        mb = Matrix::Random(n, n);
        mc = Matrix::Zero(n, n);
        step = [&] { mc.noalias() = ma * mb; };
      }
      long inner = 0;
      const double t = time_per_call(step, reps, min_seconds, inner);
      rep.rows.push_back({rep.algorithms[a], n, t, inner});
      times[a].push_back(t);
    }
  }
  for (std::size_t a = 0; a < rep.algorithms.size(); ++a)
    rep.exponents.push_back(fit_scaling_exponent(sizes, times[a]));
  return rep;
}

void write_scaling_csv(std::ostream& os, const ScalingReport& r) {
  os << "algorithm,n,seconds_per_iter,inner_iters\n";
  for (const auto& row : r.rows)
    os << row.algorithm << ',' << row.n << ',' << csv::format_double(row.seconds_per_iter) << ',' << row.inner_iters
       << '\n';
  os << "# exponents (fit on the largest half of sizes)\n";
  for (std::size_t a = 0; a < r.algorithms.size(); ++a)
    os << "# " << r.algorithms[a] << ',' << (std::isfinite(r.exponents[a]) ? csv::format_double(r.exponents[a]) : "nan")
       << '\n';
}

}  // namespace adacgp
