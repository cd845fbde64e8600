#pragma once

// Renewal statistics of the scalar Cartan coordinate (scalar_observable) and of
// log-norms of adjoint products: visit counts over shifted intervals, hitting
// and escape probabilities.

#include <cstdint>
#include <vector>

#include "weylwalk/walk.hpp"

namespace weylwalk {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
};

struct VisitCounter {
  Interval interval;
  std::vector<double> shifts;
  std::vector<std::vector<int>> counts;  // counts[s][j]: #{0 <= m <= horizon : x_m in I + shifts[s]}
  std::vector<double> mean;
  std::vector<double> stderr_;
  int horizon = 0;
  double lambda_hat = 0.0;        // drift of the observable per step
  double reentry_probability = 0.0;  // fraction of trajectories visiting some I + t in (horizon, 2 horizon]
  bool lower_bound = false;          // reentry_probability >= 1e-3
  std::uint64_t master_seed = 0;

  /// leb(I) / lambda_hat.
  double renewal_limit() const { return lambda_hat > 0.0 ? interval.length() / lambda_hat : 0.0; }
  /// Least-squares slope of mean count against shift over the last half of the grid.
  double tail_slope() const;
  /// P(count >= k) for k = 0 .. max count at shift index s.
  std::vector<double> tail_distribution(std::size_t s) const;
};

/// Drift and per-step spread of an observable from a short pilot run.
struct Pilot {
  double lambda_hat = 0.0;
  double sigma_hat = 0.0;
};

/// ceil((max shift + hi + 10 sigma sqrt(m0)) / lambda) * 3 with m0 the
/// expected crossing time of the far end of the grid.
int renewal_horizon(const Pilot& p, const Interval& interval, const std::vector<double>& shifts);

/// Trajectory j uses CounterRng(master_seed, j); horizon 0 selects it automatically.
VisitCounter visit_counts(const MeasureSpec& mu, const Interval& interval, const std::vector<double>& shifts,
                          int horizon, int n_traj, std::uint64_t master_seed);

/// Counts for log |S_n v| with S_n = b_n^T ... b_1^T, n >= 0.
VisitCounter log_norm_renewal(const MeasureSpec& mu, const Vector& v, const Interval& interval,
                              const std::vector<double>& shifts, int horizon, int n_traj,
                              std::uint64_t master_seed);

struct HittingCurve {
  std::vector<double> shifts;
  std::vector<double> probability;  // P(exists m <= horizon : x_m(g0 b_1..b_m) in I + s)
  int horizon = 0;
};

HittingCurve hitting_probability(const MeasureSpec& mu, const Interval& interval, const std::vector<double>& shifts,
                                 const GroupElement& g0, int horizon, int n_traj, std::uint64_t master_seed);

/// Smallest length L in `lengths` with hitting probability >= target at every
/// shift and every start, for I = [0, L]; -1 when none qualifies.
double minimal_hitting_length(const MeasureSpec& mu, const std::vector<double>& lengths,
                              const std::vector<double>& shifts, const std::vector<GroupElement>& starts,
                              int horizon, int n_traj, std::uint64_t master_seed, double target = 0.95);

struct EscapeTable {
  double r = 0.0;
  std::vector<int> n0_grid;
  std::vector<std::vector<double>> probability;  // [start][n0]: P(x_m >= x_0 + R for n0 <= m <= horizon)
  int horizon = 0;

  /// Smallest n0 reaching 1 - eps for every start, -1 when none.
  int uniform_n0(double eps) const;
};

EscapeTable escape_probability(const MeasureSpec& mu, double r, const std::vector<int>& n0_grid,
                               const std::vector<GroupElement>& starts, int horizon, int n_traj,
                               std::uint64_t master_seed);

/// Deterministic random starts: k1 diag(e^{s}, e^{-s}) k2 with s uniform in [0, spread].
std::vector<GroupElement> random_starts(int d, int count, double spread, std::uint64_t seed);

}  // namespace weylwalk
