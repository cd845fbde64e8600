#pragma once

// mu-random walks on SL_d(R) tracked in factored Cartan form, so the product
// b_1 ... b_n is never formed.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "weylwalk/lie_core.hpp"
#include "weylwalk/rng.hpp"

namespace weylwalk {

struct Atom {
  GroupElement element;
  double weight = 0.0;
};

/// Finitely supported probability measure on SL_d(R).
class MeasureSpec {
 public:
  MeasureSpec() = default;
  /// Throws InvalidInput when empty, mixed dimensions, non-positive weights
  /// or weights not summing to 1 within 1e-12.
  MeasureSpec(std::vector<Atom> atoms);

  int dim() const { return dim_; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const GroupElement& sample(CounterRng& rng) const;
  /// Image under g -> g^-1.
  MeasureSpec inverse() const;
  /// Image under g -> g^T (the adjoint walk).
  MeasureSpec transpose() const;

  /// FNV-1a over the shortest round-trip text of the atoms.
  std::uint64_t hash() const;

  /// Result of the density screen, once computed by zariski_screen.
  std::optional<bool> zariski_density_heuristic;

 private:
  int dim_ = 0;
  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
};

/// Uniform measure on the given elements.
MeasureSpec uniform_measure(const std::vector<GroupElement>& elements);
/// Dirac mass.
MeasureSpec dirac(const GroupElement& g);
/// Reference two-atom measure on SL_2: g1 = diag(2, 1/2), g2 = R(pi/4) g1 R(-pi/4).
MeasureSpec reference_measure();

struct WalkState {
  std::int64_t step = 0;
  CartanTriple factored;  // b_1...b_n = k diag(exp(t + logscale)) l
  Matrix k_aligned;
  CounterRng rng;

  static WalkState start(int d, CounterRng rng);
  /// Start at g0 instead of the identity.
  static WalkState start_at(const GroupElement& g0, CounterRng rng);
};

/// Multiplies the state on the right by the increment b.
WalkState advance_by(WalkState s, const GroupElement& b);
/// Samples b_{n+1} from mu with the state's generator and advances.
WalkState advance(WalkState s, const MeasureSpec& mu);

/// Sign-diagonal alignment of `next` to `previous`: maximizes
/// trace(previous^T next S) subject to det(next S) = det(previous).
Matrix align_frame(const Matrix& previous, const Matrix& next);

struct TrajectoryRecord {
  std::vector<ChamberVector> t_seq;  // t_1 .. t_n
  std::vector<Matrix> k_seq;         // aligned k_1 .. k_n, empty when not kept
  std::uint64_t seed = 0;
  int n_steps = 0;
};

/// Deterministic in (mu, n, seed): the walk uses CounterRng(seed, 0).
TrajectoryRecord trajectory(const MeasureSpec& mu, int n, std::uint64_t seed, bool keep_k = true);

struct LyapunovEstimate {
  ChamberVector mean;  // per-step rate of t_n
  Vector stderr_;      // batch-means standard error per coordinate
  bool zariski_dense_signature = false;  // alpha_1(mean) > 3 stderr
};

/// Mean of t_n / n over trajectories CounterRng(master_seed, i), i < n_traj.
LyapunovEstimate lyapunov_estimate(const MeasureSpec& mu, int n, int n_traj, std::uint64_t master_seed);

struct LimitFlagEstimate {
  FlagPoint flag;
  double stability_gap = 0.0;  // flag distance between k at n/2 and at n
  bool unstable = false;       // gap above 0.1
};

LimitFlagEstimate limit_flag(const TrajectoryRecord& rec);

struct RootGrowth {
  double tail_min = 0.0;  // min of alpha_i(t_n) over the tail window
  double slope = 0.0;     // least-squares slope of alpha_i(t_n) in n
  bool positive = false;
};

/// Per simple root, over the last `tail_fraction` of the record.
std::vector<RootGrowth> root_growth_check(const TrajectoryRecord& rec, double tail_fraction = 0.5);

struct ZariskiScreen {
  bool passed = false;
  bool root_gaps_grow = false;     // every simple root grows on a 10^4-step walk
  bool flags_spread = false;       // 16 limit lines not near a common hyperplane
  double spread_singular_value = 0.0;
  std::vector<double> root_slopes;
};

/// Heuristic screen; a report, not a certificate.
ZariskiScreen zariski_screen(const MeasureSpec& mu, std::uint64_t seed = 0x5eed, int n_steps = 10000);

/// Scalar Cartan observable: t_1 - t_2 for d = 2 (hyperbolic displacement),
/// t_1 otherwise.
double scalar_observable(const ChamberVector& t);

}  // namespace weylwalk
