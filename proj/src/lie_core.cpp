#include "weylwalk/lie_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace weylwalk {

namespace {

constexpr double kWallTol = 1e-10;

bool all_finite(const Matrix& m) { return m.allFinite(); }

struct LuNoPivot {
  Matrix lower;  // unit lower triangular
  Matrix upper;
  double min_pivot_ratio = 0.0;
};

// Doolittle without pivoting; the caller guarantees nonzero leading minors.
LuNoPivot lu_no_pivot(const Matrix& a) {
  const int d = static_cast<int>(a.rows());
  LuNoPivot out{Matrix::Identity(d, d), Matrix::Zero(d, d),
                std::numeric_limits<double>::infinity()};
  Matrix work = a;
  for (int k = 0; k < d; ++k) {
    const double pivot = work(k, k);
    out.min_pivot_ratio = std::min(out.min_pivot_ratio, std::abs(pivot));
    for (int j = k; j < d; ++j) out.upper(k, j) = work(k, j);
    if (pivot == 0.0) break;
    for (int i = k + 1; i < d; ++i) {
      const double f = work(i, k) / pivot;
      out.lower(i, k) = f;
      for (int j = k; j < d; ++j) work(i, j) -= f * work(k, j);
    }
  }
  return out;
}

// Leading principal minors of an orthogonal-product matrix.
std::vector<double> leading_minors(const Matrix& c) {
  std::vector<double> minors;
  const int d = static_cast<int>(c.rows());
  for (int k = 1; k <= d; ++k) minors.push_back(c.topLeftCorner(k, k).determinant());
  return minors;
}

Matrix reverse_columns(const Matrix& m) { return m.rowwise().reverse(); }

}  // namespace

// GroupElement ----------------------------------------------------------------

GroupElement::GroupElement(Matrix m) {
  if (m.rows() != m.cols() || m.rows() < 2)
    throw InvalidInput("group element must be a square matrix of size >= 2");
  if (!all_finite(m)) throw InvalidInput("group element has non-finite entries");
  const double det = m.determinant();
  if (!(det > 0.0) || !std::isfinite(det))
    throw InvalidInput("group element needs a positive determinant, got " + std::to_string(det));
  m /= std::pow(det, 1.0 / static_cast<double>(m.rows()));
  m_ = std::move(m);
}

GroupElement GroupElement::identity(int d) { return GroupElement(Matrix::Identity(d, d)); }

GroupElement GroupElement::diagonal_exp(const Vector& s) {
  Matrix m = Matrix::Zero(s.size(), s.size());
  const double mean = s.mean();
  for (Eigen::Index i = 0; i < s.size(); ++i) m(i, i) = std::exp(s(i) - mean);
  return GroupElement(std::move(m));
}

GroupElement GroupElement::from_unimodular(Matrix m) {
  if (m.rows() == m.cols() && m.rows() >= 2 && all_finite(m) &&
      std::abs(m.determinant() - 1.0) <= 1e-9) {
    GroupElement g;
    g.m_ = std::move(m);
    return g;
  }
  return GroupElement(std::move(m));
}

GroupElement GroupElement::inverse() const { return from_unimodular(m_.inverse()); }

GroupElement GroupElement::operator*(const GroupElement& other) const {
  if (dim() != other.dim()) throw InvalidInput("dimension mismatch in product");
  return GroupElement(m_ * other.m_);
}

// ChamberVector ---------------------------------------------------------------

ChamberVector::ChamberVector(Vector t) {
  if (t.size() < 2 || !t.allFinite()) throw InvalidInput("chamber vector needs >= 2 finite entries");
  for (Eigen::Index i = 0; i + 1 < t.size(); ++i)
    if (t(i) - t(i + 1) < -kWallTol) throw InvalidInput("chamber vector is not sorted");
  if (std::abs(t.sum()) > 1e-9 * std::max(1.0, t.cwiseAbs().maxCoeff()))
    throw InvalidInput("chamber vector does not sum to zero");
  t_ = std::move(t);
}

ChamberVector ChamberVector::normalized(Vector t) {
  std::sort(t.data(), t.data() + t.size(), std::greater<>());
  t.array() -= t.mean();
  ChamberVector c;
  c.t_ = std::move(t);
  return c;
}

ChamberVector ChamberVector::opposite() const {
  Vector r = -t_.reverse();
  ChamberVector c;
  c.t_ = std::move(r);
  return c;
}

Matrix CartanTriple::reconstruct() const {
  Vector e = (t.values().array() + logscale).exp();
  return k * e.asDiagonal() * l;
}

// Log-scaled one-sided Jacobi ---------------------------------------------------

LogSvd log_scaled_svd(const Matrix& m, const Vector& col_log_scale) {
  const int d = static_cast<int>(m.cols());
  const int rows = static_cast<int>(m.rows());
  Matrix cols = m;
  Vector s = col_log_scale;
  Matrix v = Matrix::Identity(d, d);
  for (int j = 0; j < d; ++j) {
    const double n = cols.col(j).norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw InvalidInput("singular or non-finite column in SVD");
    cols.col(j) /= n;
    s(j) += std::log(n);
  }
  constexpr int kMaxSweeps = 80;
  const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(rows, 2);
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (int p = 0; p < d - 1; ++p) {
      for (int q = p + 1; q < d; ++q) {
        const double gamma = cols.col(p).dot(cols.col(q));
        if (std::abs(gamma) <= tol) continue;
        rotated = true;
        // big carries the larger log scale, so rho <= 1.
        const int big = s(p) >= s(q) ? p : q;
        const int small = big == p ? q : p;
        const double rho = std::exp(s(small) - s(big));
        const double zeta = (rho * rho - 1.0) / (2.0 * gamma);
        const double sign = zeta >= 0.0 ? 1.0 : -1.0;
        const double tau = sign / (std::abs(zeta) + std::sqrt(rho * rho + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + rho * rho * tau * tau);
        const double sn = c * rho * tau;
        Vector vb = cols.col(big);
        Vector vs = cols.col(small);
        cols.col(big) = c * (vb - (rho * rho * tau) * vs);
        cols.col(small) = c * (tau * vb + vs);
        Vector rb = v.col(big);
        Vector rs = v.col(small);
        v.col(big) = c * rb - sn * rs;
        v.col(small) = sn * rb + c * rs;
        for (int j : {big, small}) {
          const double n = cols.col(j).norm();
          cols.col(j) /= n;
          s(j) += std::log(n);
        }
      }
    }
    if (!rotated) break;
  }
  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return s(a) > s(b); });
  LogSvd out{Matrix(rows, d), Vector(d), Matrix(d, d)};
  for (int j = 0; j < d; ++j) {
    out.u.col(j) = cols.col(order[j]);
    out.log_sv(j) = s(order[j]);
    out.v.col(j) = v.col(order[j]);
  }
  return out;
}

CartanTriple cartan_decompose_scaled(const Vector& scale, const Matrix& m) {
  if (!all_finite(m) || !scale.allFinite()) throw InvalidInput("non-finite input to Cartan decomposition");
  // diag(e^scale) m = (m^T diag(e^scale))^T = V S U^T.
  LogSvd svd = log_scaled_svd(m.transpose(), scale);
  const int d = static_cast<int>(m.rows());
  CartanTriple out;
  out.k = std::move(svd.v);
  out.l = svd.u.transpose();
  out.logscale = svd.log_sv.mean();
  Vector t = svd.log_sv.array() - out.logscale;
  for (int i = 0; i + 1 < d; ++i) {
    if (t(i) - t(i + 1) < kWallTol) out.degenerate = true;
  }
  for (int j = 0; j < d; ++j) {
    int lead = 0;
    while (lead < d - 1 && std::abs(out.k(lead, j)) < 1e-12) ++lead;
    if (out.k(lead, j) < 0.0) {
      out.k.col(j) *= -1.0;
      out.l.row(j) *= -1.0;
    }
  }
  out.t = ChamberVector::normalized(std::move(t));
  return out;
}

CartanTriple cartan_decompose(const GroupElement& g) {
  CartanTriple out = cartan_decompose_scaled(Vector::Zero(g.dim()), g.matrix());
  // Unimodular input: the mean log singular value is rounding noise.
  out.logscale = 0.0;
  return out;
}

ChamberVector cartan_projection(const GroupElement& g) { return cartan_decompose(g).t; }

double symspace_norm(const GroupElement& g) { return cartan_projection(g).norm(); }

double symspace_distance(const GroupElement& g, const GroupElement& h) {
  if (g.dim() != h.dim()) throw InvalidInput("dimension mismatch in symspace_distance");
  // g^-1 h via a solve keeps conditioning better than an explicit inverse.
  Matrix rel = g.matrix().partialPivLu().solve(h.matrix());
  return symspace_norm(GroupElement(std::move(rel)));
}

// Flags ----------------------------------------------------------------------

Matrix orthonormalize(const Matrix& m) {
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(m.rows(), m.cols());
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  return q;
}

FlagPoint::FlagPoint(const Matrix& frame) {
  if (frame.rows() != frame.cols() || !all_finite(frame))
    throw InvalidInput("flag frame must be a finite square matrix");
  frame_ = orthonormalize(frame);
}

FlagPoint FlagPoint::standard(int d) { return FlagPoint(Matrix::Identity(d, d)); }

FlagPoint FlagPoint::act(const Matrix& g) const { return FlagPoint(g * frame_); }

FlagPoint FlagPoint::reversed() const {
  FlagPoint f;
  f.frame_ = reverse_columns(frame_);
  return f;
}

double flag_distance(const FlagPoint& a, const FlagPoint& b) {
  const int d = a.dim();
  double worst = 0.0;
  for (int k = 1; k < d; ++k) {
    const double cosine = (a.frame().leftCols(k).transpose() * b.frame().leftCols(k)).determinant();
    worst = std::max(worst, std::sqrt(std::max(0.0, 1.0 - cosine * cosine)));
  }
  return worst;
}

OppositeFlag OppositeFlag::standard(int d) { return {FlagPoint::standard(d)}; }

OppositeFlag OppositeFlag::from_actual_frame(const Matrix& actual) {
  return {FlagPoint(actual).reversed()};
}

OppositeFlag OppositeFlag::act(const Matrix& g) const {
  return from_actual_frame(g * reverse_columns(point.frame()));
}

std::optional<FlagPair> is_transverse(const OppositeFlag& minus, const FlagPoint& plus, double tau,
                                      TransversalityRejection* rejection) {
  if (!(tau > 0.0)) throw InvalidInput("transversality tolerance must be positive");
  if (minus.dim() != plus.dim()) throw InvalidInput("dimension mismatch in is_transverse");
  const Matrix c = minus.point.frame().transpose() * plus.frame();
  const auto minors = leading_minors(c);
  double margin = 1.0;
  for (std::size_t k = 0; k < minors.size(); ++k) {
    const double v = std::abs(minors[k]);
    if (v <= tau) {
      if (rejection) *rejection = {static_cast<int>(k) + 1, minors[k]};
      return std::nullopt;
    }
    margin = std::min(margin, v);
  }
  return FlagPair{minus, plus, margin};
}

MaximalFlat flat_from_flags(const FlagPair& p, double tau) {
  TransversalityRejection why;
  auto checked = is_transverse(p.minus, p.plus, tau, &why);
  if (!checked)
    throw InvalidInput("flag pair is not transverse (minor " + std::to_string(why.failing_minor) + ")");
  const Matrix c = p.minus.point.frame().transpose() * p.plus.frame();
  const LuNoPivot lu = lu_no_pivot(c);
  // g = plus * U^-1 maps the standard flag to plus and, since minus^T g = L is
  // lower triangular, the standard opposite flag to minus.
  Matrix g = lu.upper.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(p.plus.frame());
  for (Eigen::Index j = 0; j < g.cols(); ++j) g.col(j).normalize();
  if (g.determinant() < 0.0) g.col(0) *= -1.0;
  return {GroupElement(std::move(g)), *checked};
}

bool same_flat(const MaximalFlat& a, const MaximalFlat& b, double tol) {
  const Matrix rel = a.base.matrix().partialPivLu().solve(b.base.matrix());
  const int d = static_cast<int>(rel.rows());
  std::vector<int> hit(d, 0);
  for (int j = 0; j < d; ++j) {
    Eigen::Index row = 0;
    const double top = rel.col(j).cwiseAbs().maxCoeff(&row);
    if (!(top > 0.0)) return false;
    for (int i = 0; i < d; ++i)
      if (i != row && std::abs(rel(i, j)) > tol * top) return false;
    ++hit[row];
  }
  return std::all_of(hit.begin(), hit.end(), [](int h) { return h == 1; });
}

std::vector<std::vector<int>> permutations(int d) {
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

Matrix permutation_matrix(const std::vector<int>& perm) {
  const int d = static_cast<int>(perm.size());
  Matrix w = Matrix::Zero(d, d);
  for (int j = 0; j < d; ++j) w(perm[j], j) = 1.0;
  return w;
}

std::vector<FlagPair> weyl_orbit(const FlagPair& p) {
  const MaximalFlat flat = flat_from_flags(p, std::min(kDefaultTransversalityTol, p.transversality_margin / 2));
  const Matrix& g = flat.base.matrix();
  std::vector<FlagPair> out;
  for (const auto& perm : permutations(p.plus.dim())) {
    const Matrix gw = g * permutation_matrix(perm);
    FlagPoint plus(gw);
    OppositeFlag minus = OppositeFlag::from_actual_frame(reverse_columns(gw));
    auto pair = is_transverse(minus, plus, std::numeric_limits<double>::min());
    if (pair) out.push_back(*pair);
  }
  return out;
}

// Distance to a flat -------------------------------------------------------------

namespace {

struct Objective {
  Matrix rel;     // base^-1 * left
  Vector scale;   // column log scale of the point
  Matrix basis;   // orthonormal basis of the trace-free subspace, d x (d-1)

  // f(z) = |kappa(diag(e^-s) rel diag(e^scale))|^2 with s = basis z.
  double eval(const Vector& z, Vector* grad) const {
    const Vector s = basis * z;
    Matrix rowscaled = (-s.array()).exp().matrix().asDiagonal() * rel;
    LogSvd svd = log_scaled_svd(rowscaled, scale);
    const Vector kappa = svd.log_sv.array() - svd.log_sv.mean();
    if (grad) {
      const int d = static_cast<int>(s.size());
      Vector gs(d);
      for (int i = 0; i < d; ++i) {
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += kappa(j) * svd.u(i, j) * svd.u(i, j);
        gs(i) = -2.0 * acc;
      }
      *grad = basis.transpose() * gs;
    }
    return kappa.squaredNorm();
  }
};

Matrix tracefree_basis(int d) {
  Matrix a = Matrix::Zero(d, d - 1);
  for (int j = 0; j < d - 1; ++j) {
    a(j, j) = 1.0;
    a(j + 1, j) = -1.0;
  }
  return orthonormalize(a);
}

// BFGS with Armijo backtracking; the objective is convex along the flat.
FlatDistanceResult minimize(const Objective& obj, Vector z) {
  constexpr int kMaxIter = 400;
  const Eigen::Index n = z.size();
  Vector g;
  double f = obj.eval(z, &g);
  Matrix h = Matrix::Identity(n, n);
  FlatDistanceResult res;
  res.converged = false;
  int it = 0;
  for (; it < kMaxIter; ++it) {
    if (g.norm() <= 1e-11 * std::max(1.0, std::sqrt(f))) {
      res.converged = true;
      break;
    }
    Vector dir = -h * g;
    if (dir.dot(g) >= 0.0) {
      h.setIdentity();
      dir = -g;
    }
    double step = 1.0;
    Vector zn, gn;
    double fn = f;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      zn = z + step * dir;
      fn = obj.eval(zn, &gn);
      if (fn <= f + 1e-4 * step * dir.dot(g)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Rounding floor reached; near-stationary points count as converged.
      res.converged = g.norm() <= 1e-6 * std::max(1.0, std::sqrt(f));
      break;
    }
    const Vector sk = zn - z;
    const Vector yk = gn - g;
    const double sy = sk.dot(yk);
    if (sy > 1e-300) {
      const double rho = 1.0 / sy;
      const Matrix eye = Matrix::Identity(n, n);
      h = (eye - rho * sk * yk.transpose()) * h * (eye - rho * yk * sk.transpose()) +
          rho * sk * sk.transpose();
    }
    z = zn;
    g = gn;
    f = fn;
  }
  res.iterations = it;
  res.distance = std::sqrt(std::max(0.0, f));
  res.argmin = obj.basis * z;
  return res;
}

}  // namespace

FlatDistanceResult distance_to_flat_scaled(const Matrix& left, const Vector& scale,
                                           const MaximalFlat& flat) {
  const int d = flat.base.dim();
  if (left.rows() != d || scale.size() != d) throw InvalidInput("dimension mismatch in distance_to_flat");
  Objective obj{flat.base.matrix().partialPivLu().solve(left), scale, tracefree_basis(d)};
  // Start 1: row norms of base^-1 x, the exact answer when x lies on the flat.
  Vector rowlog(d);
  for (int i = 0; i < d; ++i) {
    double top = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j)
      if (obj.rel(i, j) != 0.0) top = std::max(top, std::log(std::abs(obj.rel(i, j))) + scale(j));
    double acc = 0.0;
    for (int j = 0; j < d; ++j)
      if (obj.rel(i, j) != 0.0) acc += std::exp(2.0 * (std::log(std::abs(obj.rel(i, j))) + scale(j) - top));
    rowlog(i) = top + 0.5 * std::log(acc);
  }
  rowlog.array() -= rowlog.mean();
  std::vector<Vector> starts{obj.basis.transpose() * rowlog, Vector::Zero(d - 1)};
  if (d == 2) {
    // Coarse grid on the one-dimensional flat.
    const double box = std::abs(starts[0](0)) + 5.0;
    double best = std::numeric_limits<double>::infinity();
    Vector best_z(1);
    for (double z = -box; z <= box; z += 0.5) {
      Vector zz(1);
      zz(0) = z;
      const double v = obj.eval(zz, nullptr);
      if (v < best) {
        best = v;
        best_z = zz;
      }
    }
    starts.push_back(best_z);
  }
  FlatDistanceResult best;
  best.distance = std::numeric_limits<double>::infinity();
  for (const Vector& z0 : starts) {
    FlatDistanceResult r = minimize(obj, z0);
    if (r.distance < best.distance) best = r;
  }
  return best;
}

FlatDistanceResult distance_to_flat(const GroupElement& g, const MaximalFlat& flat) {
  return distance_to_flat_scaled(g.matrix(), Vector::Zero(g.dim()), flat);
}

FlatDistanceResult distance_to_flat(const CartanTriple& x, const MaximalFlat& flat) {
  return distance_to_flat_scaled(x.k, x.t.values(), flat);
}

// Helpers ----------------------------------------------------------------------

Matrix rotation2(double angle) {
  Matrix r(2, 2);
  r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return r;
}

std::optional<LowerUpper> lu_no_pivoting(const Matrix& a, double min_pivot) {
  LuNoPivot lu = lu_no_pivot(a);
  if (!(lu.min_pivot_ratio > min_pivot)) return std::nullopt;
  return LowerUpper{std::move(lu.lower), std::move(lu.upper)};
}

std::optional<FlagPoint> push_flag_diagonal(const Vector& t, const Matrix& frame) {
  const int d = static_cast<int>(frame.rows());
  const auto minors = leading_minors(frame);
  for (int k = 0; k < d; ++k)
    if (std::abs(minors[k]) < 1e-300) return std::nullopt;
  const LuNoPivot lu = lu_no_pivot(frame);
  // flag(diag(e^t) L U) = flag(diag(e^t) L diag(e^-t)); entries below the
  // diagonal shrink by exp(t_i - t_j).
  Matrix contracted = lu.lower;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < i; ++j) contracted(i, j) = lu.lower(i, j) * std::exp(t(i) - t(j));
  return FlagPoint(contracted);
}

}  // namespace weylwalk
