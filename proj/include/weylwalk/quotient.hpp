#pragma once

// Rank-one quotients Lambda \ SL_2(R): Fuchsian groups with reduction to a
// fundamental domain, Green functions of the walk and of the geodesic flow,
// Poincare series and critical exponents.
//
// Units: hyperbolic (curvature -1) throughout, so delta_G = 1 and a_t =
// diag(e^{t/2}, e^{-t/2}) moves at unit speed. Only BallTarget radii are given
// in the symmetric-space metric of lie_core (hyperbolic / sqrt 2).

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "weylwalk/walk.hpp"

namespace weylwalk {

using Point = std::complex<double>;
using Mat2 = Eigen::Matrix2d;

/// Mobius action on the upper half-plane.
Point mobius(const Mat2& g, Point z);
/// g . i
Point orbit_point(const Mat2& g);
double hyperbolic_distance(Point a, Point b);
/// Element g with g . i = z (upper triangular).
GroupElement frame_at(Point z);

enum class ReductionMode { none, modular_exact, cyclic_exact, dirichlet_greedy };

std::string to_string(ReductionMode m);
ReductionMode reduction_mode_from_string(const std::string& s);

/// g = n_x a_y k_theta in Iwasawa coordinates: g . i = x + i y. The log of y
/// is stored, so points arbitrarily close to the boundary stay representable.
struct Frame {
  double x = 0.0;
  double log_y = 0.0;
  double theta = 0.0;

  static Frame from(const Mat2& g);
  Point point() const { return {x, std::exp(log_y)}; }
  /// Overflows for extreme log_y; for tests and output.
  Mat2 matrix() const;
  /// Frame of gamma g.
  Frame left(const Mat2& gamma) const;
  /// Frame of g b.
  Frame right(const Mat2& b) const;
};

struct QuotientPoint {
  Frame rep;            // representative of Lambda g
  int word_length = 0;  // reduction steps applied
  bool flagged = false; // greedy cap reached
};

class FuchsianGroup {
 public:
  FuchsianGroup() = default;
  /// `generators` must not list inverses; they are added. Throws InvalidInput
  /// for non-2x2 generators or a mode that does not fit the generators.
  FuchsianGroup(std::string name, std::vector<GroupElement> generators, ReductionMode mode,
                Point basepoint = Point(0.0, 1.0));

  static FuchsianGroup trivial();
  /// PSL_2(Z) with S, T; basepoint 2i (trivial stabilizer).
  static FuchsianGroup modular();
  /// <h> for a hyperbolic h.
  static FuchsianGroup cyclic(const GroupElement& h);
  /// Free group on A = hyperbolic translation of length `length` along the unit
  /// semicircle and B = its conjugate by diag(sqrt 3, 1/sqrt 3).
  static FuchsianGroup schottky(double length);

  const std::string& name() const { return name_; }
  ReductionMode mode() const { return mode_; }
  Point basepoint() const { return basepoint_; }
  /// Generators followed by their inverses.
  const std::vector<Mat2>& generators() const { return gens_; }
  int generator_count() const { return static_cast<int>(gens_.size()) / 2; }
  bool is_trivial() const { return gens_.empty(); }
  /// Identity, generators and products of two generators.
  const std::vector<Mat2>& neighbors() const { return neighbors_; }

  QuotientPoint reduce(const Frame& g) const;
  QuotientPoint reduce(const GroupElement& g) const { return reduce(Frame::from(Mat2(g.matrix()))); }

  /// False when some element of word length <= max_len lies within 1e-6 of
  /// +-identity without being equal to it.
  bool discreteness_screen(int max_len = 6) const;

 private:
  std::string name_;
  ReductionMode mode_ = ReductionMode::none;
  Point basepoint_{0.0, 1.0};
  std::vector<Mat2> gens_;
  std::vector<Mat2> neighbors_;
  // cyclic_exact: h = conj diag(l, 1/l) conj^-1
  Mat2 conj_ = Mat2::Identity();
  Mat2 conj_inv_ = Mat2::Identity();
  double log_multiplier_ = 0.0;
};

struct BallTarget {
  Point center;
  double radius = 0.0;  // symmetric-space metric
  double hyperbolic_radius() const { return to_hyperbolic(radius); }
};

/// The same ball with its centre moved into the fundamental domain.
BallTarget reduced_target(const FuchsianGroup& group, const BallTarget& f);

/// Membership of the class of a reduced representative in the image of the
/// ball; f must come from reduced_target.
bool in_target(const FuchsianGroup& group, const BallTarget& f, const Frame& reduced_rep);

// Orbit enumeration ----------------------------------------------------------

struct OrbitElement {
  Mat2 g;
  double distance = 0.0;  // d(z1, g z2)
};

struct OrbitEnumeration {
  std::vector<OrbitElement> elements;  // sorted by distance, all with distance <= r_max
  double r_max = 0.0;
  int merges = 0;               // duplicates removed by the matrix hash
  double collision_rate = 0.0;  // distinct kept elements sharing an orbit point
  bool flagged = false;         // collision_rate above 1e-6
};

/// Breadth-first search over non-backtracking words, keeping elements with
/// d(z1, g z2) <= r_max + slack; duplicates are removed by hashing entries
/// rounded to 1e-8 (up to sign). Throws InvalidInput past max_elements.
OrbitEnumeration enumerate_orbit(const FuchsianGroup& group, Point z1, Point z2, double r_max, double slack = 3.0,
                                 std::size_t max_elements = 4000000);

struct PoincareResult {
  double partial_sum = 0.0;
  double growth_diagnostic = 0.0;  // slope of log shell contributions over the last half of the shells
  bool diverging = false;          // growth_diagnostic >= -kDivergenceTolerance
  std::vector<double> shell_contribution;  // unit-width distance shells
  std::size_t terms = 0;
  bool flagged = false;
};

inline constexpr double kDivergenceTolerance = 0.15;

PoincareResult poincare_series(const FuchsianGroup& group, Point z1, Point z2, double s, double r_max);
PoincareResult poincare_series(const OrbitEnumeration& orbit, double s);

struct CriticalExponent {
  double delta = 0.0;
  double stderr_ = 0.0;
  std::size_t points = 0;
  bool wide = false;  // fewer than 100 orbit points
};

/// Least-squares slope of log #{g : d(z1, g z2) <= R} against R on a 0.25 grid
/// over [r_max / 2, r_max].
CriticalExponent critical_exponent(const FuchsianGroup& group, Point z1, Point z2, double r_max);
CriticalExponent critical_exponent(const OrbitEnumeration& orbit);

/// Half the smallest displacement d(z, g z) over nontrivial g, searched to `search`.
double injectivity_radius(const FuchsianGroup& group, Point z, double search = 8.0);

// Green functions -------------------------------------------------------------

struct GreenEstimate {
  double estimate = 0.0;       // mean occupation over the full horizon
  double estimate_half = 0.0;  // same over the first half of the horizon
  double stderr_ = 0.0;
  double global_rate = 0.0;       // occupation per unit time over the horizon
  double last_decile_rate = 0.0;  // occupation per unit time over the last tenth
  bool tail_flag = false;         // last_decile_rate > 1e-3
  int flagged_reductions = 0;
};

/// Trajectory j of start s uses CounterRng(stream_key(master_seed, s), j).
GreenEstimate walk_green(const FuchsianGroup& group, const MeasureSpec& mu, const std::vector<GroupElement>& starts,
                         const BallTarget& f, int n_max, int n_traj, std::uint64_t master_seed);

/// Midpoint Riemann sum of the occupation time of x0 a_t, 0 <= t <= t_max.
/// Throws InvalidInput unless dt <= hyperbolic radius / 4.
GreenEstimate geodesic_green(const FuchsianGroup& group, const GroupElement& x0, const BallTarget& f, double t_max,
                             double dt);
/// Average over starts.
GreenEstimate geodesic_green(const FuchsianGroup& group, const std::vector<GroupElement>& starts,
                             const BallTarget& f, double t_max, double dt);

struct KAveragedGreen {
  double lhs = 0.0;  // (1/pi) int_0^pi G(g1 k_theta, B) dtheta
  double rhs = 0.0;  // e^{-d(z1, z2)} for the trivial group, else the Poincare sum at s = 1
  double ratio = 0.0;
  int arcs = 0;
  bool injectivity_ok = true;
};

/// The integrand vanishes outside the arcs of directions whose ray meets a
/// lift of the ball; those arcs are located from the orbit and integrated by
/// Gauss-Legendre with n_k nodes each (after a sine substitution that removes
/// the square-root endpoint behaviour).
KAveragedGreen k_averaged_green(const FuchsianGroup& group, const GroupElement& g1, const BallTarget& f,
                                double t_max, int n_k = 64, double dt = 0.0);

// Dichotomy ------------------------------------------------------------------

enum class Signature { recurrent, transient, inconclusive };
enum class Verdict { both_recurrent_signature, both_transient_signature, inconsistent, inconclusive };

std::string to_string(Signature s);
std::string to_string(Verdict v);

struct DichotomyParams {
  int n_max = 400;
  int n_traj = 200;
  double t_max = 400.0;
  double dt = 0.0;  // 0 selects hyperbolic radius / 4
  int starts = 8;
  double start_spread = 0.1;  // hyperbolic distance of starts from the target centre
  std::uint64_t seed = 1;
};

struct DichotomyReport {
  GreenEstimate walk;
  GreenEstimate geodesic;
  Signature walk_signature = Signature::inconclusive;
  Signature geodesic_signature = Signature::inconclusive;
  Verdict verdict = Verdict::inconclusive;
};

/// Recurrent: tail flag set and last-decile rate >= 50% of the global rate.
/// Transient: tail flag clear, some occupation, and < 5% change between the
/// half and the full horizon.
Signature classify(const GreenEstimate& g);

DichotomyReport dichotomy_experiment(const FuchsianGroup& group, const MeasureSpec& mu, const BallTarget& f,
                                     const DichotomyParams& p);

/// Starts k_theta-rotated frames at distance `spread` from the centre.
std::vector<GroupElement> spread_starts(Point center, double spread, int count, std::uint64_t seed);

// Volume ----------------------------------------------------------------------

/// sigma(t) / e^t with sigma(t) = sinh t.
std::vector<double> volume_density_ratio(const std::vector<double>& t_grid);

struct VolumeCheck {
  double monte_carlo = 0.0;
  double stderr_ = 0.0;
  double exact = 0.0;  // int_0^R 2 pi sinh t dt
  double relative_error = 0.0;
};

/// Area of the hyperbolic disk of radius r: uniform samples in the square
/// [-1, 1]^2 of the Poincare disk, kept inside Euclidean radius tanh(r / 2)
/// and weighted by the area element 4 / (1 - |z|^2)^2.
VolumeCheck volume_monte_carlo(double r, std::int64_t samples, std::uint64_t seed);

}  // namespace weylwalk
