#pragma once

// Linear-algebra primitives on SL_d(R): Cartan (KAK) decompositions, chamber
// vectors, the symmetric-space metric, the flag variety and maximal flats.
//
// Metric convention: d(gK, hK) = |kappa(g^-1 h)|_2, with kappa the vector of
// log singular values. For d = 2 the hyperbolic distance on H^2 (curvature -1)
// is sqrt(2) times this value.

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace weylwalk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Real d x d matrix with determinant 1.
class GroupElement {
 public:
  GroupElement() = default;
  /// Rescales by det^{-1/d}. Throws InvalidInput on non-finite entries,
  /// non-square input, d < 2 or det <= 0.
  explicit GroupElement(Matrix m);

  static GroupElement identity(int d);
  /// diag(exp(s)) for a trace-free s.
  static GroupElement diagonal_exp(const Vector& s);
  /// Accepts a matrix already unimodular to 1e-9 without rescaling.
  static GroupElement from_unimodular(Matrix m);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }

  GroupElement inverse() const;
  GroupElement operator*(const GroupElement& other) const;

 private:
  Matrix m_;
};

/// Sorted log singular values, summing to zero.
class ChamberVector {
 public:
  ChamberVector() = default;
  /// Throws InvalidInput unless sorted descending (to 1e-10) with zero sum (1e-9).
  explicit ChamberVector(Vector t);
  /// Sorts and removes the mean; never throws on finite input.
  static ChamberVector normalized(Vector t);

  int dim() const { return static_cast<int>(t_.size()); }
  const Vector& values() const { return t_; }
  double operator[](int i) const { return t_(i); }
  double root(int i) const { return t_(i) - t_(i + 1); }
  double norm() const { return t_.norm(); }
  /// t -> (-t_d, ..., -t_1), the projection of the inverse.
  ChamberVector opposite() const;

 private:
  Vector t_;
};

struct CartanTriple {
  Matrix k;
  ChamberVector t;
  Matrix l;
  double logscale = 0.0;
  /// Some adjacent singular values closer than 1e-10 in log scale.
  bool degenerate = false;

  int dim() const { return t.dim(); }
  /// k diag(exp(t + logscale)) l; overflows for large t, use in tests only.
  Matrix reconstruct() const;
};

/// Full flag spanned by the leading columns of an orthogonal frame, taken
/// modulo column sign flips.
class FlagPoint {
 public:
  FlagPoint() = default;
  /// Orthonormalizes the columns in order (Gram-Schmidt via QR).
  explicit FlagPoint(const Matrix& frame);

  static FlagPoint standard(int d);
  int dim() const { return static_cast<int>(frame_.rows()); }
  const Matrix& frame() const { return frame_; }

  /// Flag of g * frame.
  FlagPoint act(const Matrix& g) const;
  /// Same flag, frame with columns in reverse order. Used to store points of
  /// the opposite flag variety.
  FlagPoint reversed() const;

 private:
  Matrix frame_;
};

/// max over k of the sine distance between the k-planes of the two flags.
double flag_distance(const FlagPoint& a, const FlagPoint& b);

/// Opposite flag stored as a FlagPoint whose reversed frame carries the flag:
/// the j-dimensional subspace is spanned by the last j columns of `frame`.
/// The base opposite flag has frame = identity.
struct OppositeFlag {
  FlagPoint point;

  static OppositeFlag standard(int d);
  /// Opposite flag whose top line is `top` (frame completed in order).
  static OppositeFlag from_actual_frame(const Matrix& actual);
  int dim() const { return point.dim(); }
  OppositeFlag act(const Matrix& g) const;
};

struct FlagPair {
  OppositeFlag minus;
  FlagPoint plus;
  double transversality_margin = 0.0;
};

struct TransversalityRejection {
  int failing_minor = 0;  // 1-based size of the first leading minor below tau
  double value = 0.0;
};

inline constexpr double kDefaultTransversalityTol = 1e-6;

/// Accepts iff all leading principal minors of minus^T plus exceed tau.
/// Returns the pair, or the rejection through `rejection` when not null.
std::optional<FlagPair> is_transverse(const OppositeFlag& minus, const FlagPoint& plus,
                                      double tau = kDefaultTransversalityTol,
                                      TransversalityRejection* rejection = nullptr);

/// The flat F = base * exp(a) * K.
struct MaximalFlat {
  GroupElement base;
  FlagPair source;
};

/// Base g with g*(standard opposite) = minus and g*(standard) = plus.
/// Throws InvalidInput when the margin is below tau.
MaximalFlat flat_from_flags(const FlagPair& p, double tau = kDefaultTransversalityTol);

/// True when both flats are the same subset of G/K: base1^-1 base2 must be a
/// monomial matrix.
bool same_flat(const MaximalFlat& a, const MaximalFlat& b, double tol = 1e-8);

/// The d! pairs obtained from p by the Weyl group.
std::vector<FlagPair> weyl_orbit(const FlagPair& p);

// Cartan decomposition -------------------------------------------------------

CartanTriple cartan_decompose(const GroupElement& g);
ChamberVector cartan_projection(const GroupElement& g);

/// Cartan decomposition of diag(exp(scale)) * m without forming the scaled
/// matrix; scale may span thousands of units. The result satisfies
/// k diag(exp(t + logscale)) l = diag(exp(scale)) m.
CartanTriple cartan_decompose_scaled(const Vector& scale, const Matrix& m);

/// Singular value decomposition as log singular values (unsorted input allowed
/// for `col_log_scale`): A = diag-scaled columns. Exposed for tests.
struct LogSvd {
  Matrix u;       // left singular vectors
  Vector log_sv;  // sorted descending
  Matrix v;       // right singular vectors
};
/// SVD of m * diag(exp(col_log_scale)) by one-sided Jacobi on log-scaled columns.
LogSvd log_scaled_svd(const Matrix& m, const Vector& col_log_scale);

double symspace_distance(const GroupElement& g, const GroupElement& h);
/// Distance from the identity coset to gK.
double symspace_norm(const GroupElement& g);

/// Hyperbolic (curvature -1) distance on H^2 equivalent of a D = 2 metric value.
inline double to_hyperbolic(double symspace_value) { return symspace_value * 1.4142135623730951; }
inline double from_hyperbolic(double hyperbolic_value) { return hyperbolic_value / 1.4142135623730951; }

struct FlatDistanceResult {
  double distance = 0.0;
  Vector argmin;  // s in a with base * a_s closest
  int iterations = 0;
  bool converged = true;
};

/// inf over s of d(x, base a_s K), where x = left * diag(exp(scale)) * K.
/// The scaled form lets callers pass factored products without overflow.
FlatDistanceResult distance_to_flat_scaled(const Matrix& left, const Vector& scale,
                                           const MaximalFlat& flat);
FlatDistanceResult distance_to_flat(const GroupElement& g, const MaximalFlat& flat);
FlatDistanceResult distance_to_flat(const CartanTriple& x, const MaximalFlat& flat);

// Small helpers shared across modules ---------------------------------------

Matrix rotation2(double angle);
/// Q factor (positive R diagonal) of a square matrix.
Matrix orthonormalize(const Matrix& m);
/// Flag of diag(exp(t)) * frame, computed without forming the exponentials.
/// Requires the frame to be transverse to the standard opposite flag; returns
/// nullopt otherwise.
std::optional<FlagPoint> push_flag_diagonal(const Vector& t, const Matrix& frame);
/// a = lower * upper with unit lower triangular `lower`, no pivoting; nullopt
/// when a pivot falls to `min_pivot` or below in absolute value.
struct LowerUpper {
  Matrix lower;
  Matrix upper;
};
std::optional<LowerUpper> lu_no_pivoting(const Matrix& a, double min_pivot = 1e-300);
/// All permutations of 0..d-1 in lexicographic order.
std::vector<std::vector<int>> permutations(int d);
Matrix permutation_matrix(const std::vector<int>& perm);

}  // namespace weylwalk
