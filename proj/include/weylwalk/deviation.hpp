#pragma once

// Deviation of random products from the Weyl chamber k_inf exp(a+) K, and the
// flat-distance statistics that control it.

#include <algorithm>
#include <cstdint>
#include <vector>

#include "weylwalk/lie_core.hpp"
#include "weylwalk/walk.hpp"

namespace weylwalk {

inline int default_burn(int n) { return std::max(1000, n / 4); }

struct DeviationSeries {
  std::vector<double> dev;            // dev[i-1] = d(b_1..b_i, k_inf a_{t_i})
  std::vector<ChamberVector> t;       // t_1 .. t_n
  std::vector<Matrix> angular_ratio;  // |(k_i^T k_inf)_{rc}| exp(t_c - t_r), r > c; zero elsewhere
  std::uint64_t seed = 0;
  int burn = 0;
  double limit_gap = 0.0;  // flag distance of the k_inf proxy between burn/2 and burn
  bool unstable = false;

  /// (1/n) #{i <= n : dev_i <= r}.
  double occupancy(double r) const;
  /// min over prefixes m >= (1 - window) n of (1/m) #{i <= m : dev_i <= r}.
  double liminf_proxy(double r, double window = 0.2) const;
};

/// Runs n + burn steps of CounterRng(seed, 0). The limit flag is taken from the
/// last `burn` increments and pulled back by a backward recursion
/// xi_{T^{i-1} b} = b_i xi_{T^i b}, so no raw products are formed.
DeviationSeries deviation_series(const MeasureSpec& mu, int n, std::uint64_t seed, int burn = -1);

/// dev and angular ratios at one step from t_i and the frame of l_i xi_{T^i b}.
struct StepDeviation {
  double dev = 0.0;
  Matrix ratio;
  bool transverse = true;
};
StepDeviation step_deviation(const Vector& t, const Matrix& pulled_frame);

struct DensityCurve {
  std::vector<double> grid;
  std::vector<double> density_p10;
  std::vector<double> density_median;
  /// per_seed[s][j]: liminf proxy of stable seed s at grid[j].
  std::vector<std::vector<double>> per_seed;
  int n_traj = 0;
  int n_steps = 0;
  int excluded_unstable = 0;
  std::uint64_t master_seed = 0;
};

/// Seeds are stream_key(master_seed, j) for j < n_traj.
DensityCurve density_curve(const MeasureSpec& mu, const std::vector<double>& r_grid, int n, int n_traj,
                           std::uint64_t master_seed, double window = 0.2, int burn = -1);
DensityCurve density_curve_from(const std::vector<DeviationSeries>& series, const std::vector<double>& r_grid,
                                double window = 0.2);

struct AngularEntry {
  int i = 0;
  int j = 0;
  double envelope = 0.0;   // (1 - eps) quantile of the ratio over steps
  double log_slope = 0.0;  // slope of batch medians of log ratio against step
  double p_value = 1.0;    // two-sided test of zero slope
  bool growing = false;    // slope > 0 with p < 0.05
  bool in_claim = true;    // i > j
};

/// Entries below the diagonal carry the bound; the rest are informational.
std::vector<AngularEntry> angular_rate_check(const DeviationSeries& s, double eps = 0.1, int batches = 10);

struct BirkhoffReport {
  std::vector<int> steps;             // steps where both sides were evaluated
  std::vector<double> lhs;            // d(b_1..b_i, F(xi-, xi_b))
  std::vector<double> rhs;            // d(e, F(b_i^-1..b_1^-1 xi-, xi_{T^i b}))
  double max_residual = 0.0;
  int skipped_transversality = 0;
  int skipped_conditioning = 0;
  std::vector<double> flat_distance;  // rhs for every step 1..n (Birkhoff sequence)
  double indicator_mean = 0.0;        // mean of 1{flat_distance <= r}
};

/// Both sides of the shift identity: lhs from the factored product and the
/// flat through xi_b, rhs from the pulled-back opposite flag and the limit flag
/// of an independent walk over b_{i+1}, ..., b_{i+burn}. `sample_steps` lists
/// the steps for the identity check; lhs is evaluated only where the root gaps
/// of t_i stay below `max_gap` (the identity amplifies rounding by exp(gap)).
BirkhoffReport birkhoff_flat_distance(const MeasureSpec& mu, const OppositeFlag& minus, int n, std::uint64_t seed,
                                      const std::vector<int>& sample_steps, double r, int burn = 1000,
                                      double max_gap = 18.0);

struct StationaryMass {
  std::vector<double> r_grid;
  std::vector<double> fraction;     // nu{xi : d(e, F(minus, xi)) <= r}
  double smallest_r_two_thirds = -1.0;  // first grid value with fraction > 2/3, -1 if none
  int discarded = 0;                // samples whose pushed cloud stayed wider than 1e-4
  int rejected_transversality = 0;
};

/// Stationary flags xi sampled as limit flags of 500-step products from
/// CounterRng(master_seed, j).
std::vector<FlagPoint> stationary_samples(const MeasureSpec& mu, int n_samples, std::uint64_t master_seed,
                                          int length = 500, int* discarded = nullptr);
StationaryMass stationary_flat_mass(const std::vector<FlagPoint>& samples, const OppositeFlag& minus,
                                    const std::vector<double>& r_grid);

/// Opposite flags rotated in the (0, 1) plane by pi j / count.
std::vector<OppositeFlag> spread_opposite_flags(int d, int count);

/// max over i of dev_i / (flat_i + 1): empirical constant in
/// dev <= C (d(b_1..b_i, F(xi0-, xi_b)) + 1).
double c0_envelope(const std::vector<double>& dev, const std::vector<double>& flat_distance);

}  // namespace weylwalk
