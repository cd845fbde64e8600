#include "weylwalk/quotient.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <unordered_set>

#include "weylwalk/stats.hpp"

namespace weylwalk {

namespace {

constexpr int kReductionCap = 10000;

using Key = std::array<long long, 4>;

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    std::uint64_t h = 0;
    for (long long v : k) h = mix64(h ^ static_cast<std::uint64_t>(v));
    return static_cast<std::size_t>(h);
  }
};

// Entries rounded to 1e-8, with the sign fixed so that g and -g agree.
Key matrix_key(const Mat2& g) {
  const double* p = g.data();
  double sign = 1.0;
  for (int i = 0; i < 4; ++i) {
    if (std::abs(p[i]) > 1e-9) {
      sign = p[i] < 0.0 ? -1.0 : 1.0;
      break;
    }
  }
  Key k;
  for (int i = 0; i < 4; ++i) k[i] = std::llround(sign * p[i] * 1e8);
  return k;
}

Mat2 inverse2(const Mat2& g) {
  Mat2 inv;
  inv << g(1, 1), -g(0, 1), -g(1, 0), g(0, 0);
  return inv / g.determinant();
}

bool near_identity(const Mat2& g, double tol) {
  return (g - Mat2::Identity()).cwiseAbs().maxCoeff() < tol || (g + Mat2::Identity()).cwiseAbs().maxCoeff() < tol;
}

}  // namespace

Point mobius(const Mat2& g, Point z) {
  // Imaginary part from det * y / |cz + d|^2, free of cancellation near the boundary.
  const Point q = g(1, 0) * z + g(1, 1);
  const double q2 = std::norm(q);
  const double re = (g(0, 0) * g(1, 0) * std::norm(z) + (g(0, 0) * g(1, 1) + g(0, 1) * g(1, 0)) * z.real() +
                     g(0, 1) * g(1, 1)) / q2;
  return {re, g.determinant() * z.imag() / q2};
}

Point orbit_point(const Mat2& g) { return mobius(g, Point(0.0, 1.0)); }

double hyperbolic_distance(Point a, Point b) {
  return 2.0 * std::asinh(std::abs(a - b) / (2.0 * std::sqrt(a.imag() * b.imag())));
}

namespace {

// d(frame . i, p) computed from log y.
double frame_distance(const Frame& f, Point p) {
  const double gap = std::abs(Point(f.x, std::exp(f.log_y)) - p);
  if (gap == 0.0) return 0.0;
  const double log_u = std::log(gap / (2.0 * std::sqrt(p.imag()))) - 0.5 * f.log_y;
  return log_u > 20.0 ? 2.0 * (log_u + std::log(2.0)) : 2.0 * std::asinh(std::exp(log_u));
}

}  // namespace

Frame Frame::from(const Mat2& g) {
  const Point z = mobius(g, Point(0.0, 1.0));
  return {z.real(), std::log(z.imag()), std::atan2(g(1, 0), g(1, 1))};
}

Mat2 Frame::matrix() const {
  const double r = std::exp(0.5 * log_y);
  Mat2 n, a;
  n << 1, x, 0, 1;
  a << r, 0, 0, 1.0 / r;
  return n * a * Mat2(rotation2(theta));
}

Frame Frame::left(const Mat2& gamma) const {
  const double y = std::exp(log_y);
  const double c = gamma(1, 0), d = gamma(1, 1);
  const Point q(c * x + d, c * y);
  const double q2 = std::norm(q);
  Frame out;
  out.x = (gamma(0, 0) * c * (x * x + y * y) + (gamma(0, 0) * d + gamma(0, 1) * c) * x + gamma(0, 1) * d) / q2;
  out.log_y = log_y + std::log(gamma.determinant()) - std::log(q2);
  out.theta = theta + std::atan2(c * y, c * x + d);
  return out;
}

Frame Frame::right(const Mat2& b) const {
  const Mat2 m = Mat2(rotation2(theta)) * b;
  const Point w = mobius(m, Point(0.0, 1.0));
  Frame out;
  out.x = x + std::exp(log_y) * w.real();
  out.log_y = log_y + std::log(w.imag());
  out.theta = std::atan2(m(1, 0), m(1, 1));
  return out;
}

GroupElement frame_at(Point z) {
  if (!(z.imag() > 0.0)) throw InvalidInput("point must lie in the upper half-plane");
  const double r = std::sqrt(z.imag());
  Matrix g(2, 2);
  g << r, z.real() / r, 0.0, 1.0 / r;
  return GroupElement::from_unimodular(g);
}

std::string to_string(ReductionMode m) {
  switch (m) {
    case ReductionMode::none:
      return "none";
    case ReductionMode::modular_exact:
      return "modular_exact";
    case ReductionMode::cyclic_exact:
      return "cyclic_exact";
    case ReductionMode::dirichlet_greedy:
      return "dirichlet_greedy";
  }
  return "none";
}

ReductionMode reduction_mode_from_string(const std::string& s) {
  for (auto m : {ReductionMode::none, ReductionMode::modular_exact, ReductionMode::cyclic_exact,
                 ReductionMode::dirichlet_greedy})
    if (to_string(m) == s) return m;
  throw InvalidInput("unknown reduction_mode '" + s + "'");
}

// Groups ----------------------------------------------------------------------

FuchsianGroup::FuchsianGroup(std::string name, std::vector<GroupElement> generators, ReductionMode mode,
                             Point basepoint)
    : name_(std::move(name)), mode_(mode), basepoint_(basepoint) {
  if (!(basepoint.imag() > 0.0)) throw InvalidInput("basepoint must lie in the upper half-plane");
  for (const auto& g : generators) {
    if (g.dim() != 2) throw InvalidInput("Fuchsian generators must be 2x2");
    gens_.push_back(Mat2(g.matrix()));
  }
  const std::size_t n = gens_.size();
  for (std::size_t i = 0; i < n; ++i) gens_.push_back(inverse2(gens_[i]));

  switch (mode_) {
    case ReductionMode::none:
      if (n != 0) throw InvalidInput("reduction_mode none is only valid for the trivial group");
      break;
    case ReductionMode::modular_exact: {
      Mat2 s, t;
      s << 0, -1, 1, 0;
      t << 1, 1, 0, 1;
      auto has = [&](const Mat2& m) {
        return std::any_of(gens_.begin(), gens_.end(), [&](const Mat2& g) { return near_identity(inverse2(g) * m, 1e-12); });
      };
      if (n != 2 || !has(s) || !has(t)) throw InvalidInput("modular_exact expects the generators S and T");
      break;
    }
    case ReductionMode::cyclic_exact: {
      if (n != 1) throw InvalidInput("cyclic_exact expects exactly one generator");
      Mat2 h = gens_[0];
      if (h.trace() < 0.0) h = -h;
      if (!(h.trace() > 2.0 + 1e-12)) throw InvalidInput("cyclic_exact needs a hyperbolic generator");
      Eigen::EigenSolver<Mat2> es(h);
      const auto vals = es.eigenvalues().real();
      const auto vecs = es.eigenvectors().real();
      const int big = vals(0) > vals(1) ? 0 : 1;
      conj_.col(0) = vecs.col(big);
      conj_.col(1) = vecs.col(1 - big);
      if (conj_.determinant() < 0.0) conj_.col(1) *= -1.0;
      conj_ /= std::sqrt(conj_.determinant());
      conj_inv_ = inverse2(conj_);
      log_multiplier_ = 2.0 * std::log(vals(big));  // h acts as w -> e^{log_multiplier} w
      break;
    }
    case ReductionMode::dirichlet_greedy:
      if (n == 0) throw InvalidInput("dirichlet_greedy needs generators");
      break;
  }

  neighbors_.push_back(Mat2::Identity());
  for (const auto& g : gens_) neighbors_.push_back(g);
  for (const auto& a : gens_)
    for (const auto& b : gens_)
      if (!near_identity(a * b, 1e-12)) neighbors_.push_back(a * b);
}

FuchsianGroup FuchsianGroup::trivial() { return FuchsianGroup("trivial", {}, ReductionMode::none); }

FuchsianGroup FuchsianGroup::modular() {
  Matrix s(2, 2), t(2, 2);
  s << 0, -1, 1, 0;
  t << 1, 1, 0, 1;
  return FuchsianGroup("modular", {GroupElement(s), GroupElement(t)}, ReductionMode::modular_exact, Point(0.0, 2.0));
}

FuchsianGroup FuchsianGroup::cyclic(const GroupElement& h) {
  return FuchsianGroup("cyclic", {h}, ReductionMode::cyclic_exact);
}

FuchsianGroup FuchsianGroup::schottky(double length) {
  const double c = std::cosh(length / 2);
  const double s = std::sinh(length / 2);
  Matrix a(2, 2), b(2, 2);
  a << c, s, s, c;
  b << c, 3.0 * s, s / 3.0, c;
  return FuchsianGroup("schottky", {GroupElement(a), GroupElement(b)}, ReductionMode::dirichlet_greedy);
}

QuotientPoint FuchsianGroup::reduce(const Frame& g) const {
  QuotientPoint out;
  out.rep = g;
  Frame& f = out.rep;
  switch (mode_) {
    case ReductionMode::none:
      break;
    case ReductionMode::modular_exact: {
      Mat2 s;
      s << 0, -1, 1, 0;
      for (int step = 0; step < kReductionCap; ++step) {
        if (std::abs(f.x) > 0.5 + 1e-12) {
          const double n = std::floor(f.x + 0.5);
          f.x -= n;
        } else if (f.x * f.x + std::exp(2.0 * f.log_y) < 1.0 - 1e-12) {
          f = f.left(s);
        } else {
          break;
        }
        ++out.word_length;
      }
      break;
    }
    case ReductionMode::cyclic_exact: {
      const Point w = mobius(conj_inv_, f.point());
      const double k = std::floor(std::log(std::abs(w)) / log_multiplier_ + 0.5);
      if (k != 0.0) {
        Mat2 d = Mat2::Zero();
        d(0, 0) = std::exp(-0.5 * k * log_multiplier_);
        d(1, 1) = 1.0 / d(0, 0);
        f = f.left(conj_ * d * conj_inv_);
        out.word_length = static_cast<int>(std::abs(k));
      }
      break;
    }
    case ReductionMode::dirichlet_greedy: {
      double best = frame_distance(f, basepoint_);
      int step = 0;
      for (; step < kReductionCap; ++step) {
        int pick = -1;
        double pick_d = best;
        Frame pick_f;
        for (std::size_t i = 0; i < gens_.size(); ++i) {
          const Frame cand = f.left(gens_[i]);
          const double d = frame_distance(cand, basepoint_);
          if (d < pick_d - 1e-12) {
            pick = static_cast<int>(i);
            pick_d = d;
            pick_f = cand;
          }
        }
        if (pick < 0) break;
        f = pick_f;
        best = pick_d;
      }
      out.flagged = step == kReductionCap;
      out.word_length = step;
      break;
    }
  }
  return out;
}

bool FuchsianGroup::discreteness_screen(int max_len) const {
  std::vector<std::pair<Mat2, int>> layer{{Mat2::Identity(), -1}};
  const int n = static_cast<int>(gens_.size()) / 2;
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::pair<Mat2, int>> next;
    for (const auto& [g, last] : layer) {
      for (int i = 0; i < static_cast<int>(gens_.size()); ++i) {
        if (last >= 0 && i == (last + n) % (2 * n)) continue;
        const Mat2 h = g * gens_[i];
        if (near_identity(h, 1e-6) && !near_identity(h, 1e-12)) return false;
        next.emplace_back(h, i);
      }
    }
    layer = std::move(next);
  }
  return true;
}

BallTarget reduced_target(const FuchsianGroup& group, const BallTarget& f) {
  return {group.reduce(frame_at(f.center)).rep.point(), f.radius};
}

bool in_target(const FuchsianGroup& group, const BallTarget& f, const Frame& reduced_rep) {
  const double r = f.hyperbolic_radius();
  for (const Mat2& g : group.neighbors())
    if (frame_distance(reduced_rep.left(g), f.center) <= r) return true;
  return false;
}

// Orbits ------------------------------------------------------------------------

OrbitEnumeration enumerate_orbit(const FuchsianGroup& group, Point z1, Point z2, double r_max, double slack,
                                 std::size_t max_elements) {
  OrbitEnumeration out;
  out.r_max = r_max;
  const auto& gens = group.generators();
  const int n = static_cast<int>(gens.size()) / 2;
  std::unordered_set<Key, KeyHash> seen;
  std::deque<std::pair<Mat2, int>> queue;
  queue.emplace_back(Mat2::Identity(), -1);
  seen.insert(matrix_key(Mat2::Identity()));
  const double d0 = hyperbolic_distance(z1, z2);
  if (d0 <= r_max) out.elements.push_back({Mat2::Identity(), d0});
  while (!queue.empty()) {
    const auto [g, last] = queue.front();
    queue.pop_front();
    for (int i = 0; i < static_cast<int>(gens.size()); ++i) {
      if (last >= 0 && i == (last + n) % (2 * n)) continue;
      const Mat2 h = g * gens[i];
      const double d = hyperbolic_distance(z1, mobius(h, z2));
      if (d > r_max + slack) continue;
      if (!seen.insert(matrix_key(h)).second) {
        ++out.merges;
        continue;
      }
      if (seen.size() > max_elements) throw InvalidInput("orbit enumeration exceeded the element cap");
      queue.emplace_back(h, i);
      if (d <= r_max) out.elements.push_back({h, d});
    }
  }
  std::sort(out.elements.begin(), out.elements.end(),
            [](const OrbitElement& a, const OrbitElement& b) { return a.distance < b.distance; });

  std::vector<Point> pts;
  for (const auto& e : out.elements) pts.push_back(mobius(e.g, z2));
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.real() < b.real() || (a.real() == b.real() && a.imag() < b.imag()); });
  int collisions = 0;
  for (std::size_t i = 1; i < pts.size(); ++i)
    if (hyperbolic_distance(pts[i - 1], pts[i]) < 1e-6) ++collisions;
  out.collision_rate = pts.empty() ? 0.0 : static_cast<double>(collisions) / static_cast<double>(pts.size());
  out.flagged = out.collision_rate > 1e-6;
  return out;
}

PoincareResult poincare_series(const OrbitEnumeration& orbit, double s) {
  if (!(s >= 0.0)) throw InvalidInput("Poincare exponent must be nonnegative");
  PoincareResult out;
  out.flagged = orbit.flagged;
  out.terms = orbit.elements.size();
  const int shells = std::max(1, static_cast<int>(std::floor(orbit.r_max)));
  out.shell_contribution.assign(shells, 0.0);
  for (const auto& e : orbit.elements) {
    const double term = std::exp(-s * e.distance);
    out.partial_sum += term;
    const int k = std::min(shells - 1, static_cast<int>(e.distance));
    out.shell_contribution[k] += term;
  }
  std::vector<double> x, y;
  for (int k = shells / 2; k < shells; ++k) {
    if (out.shell_contribution[k] > 0.0) {
      x.push_back(k);
      y.push_back(std::log(out.shell_contribution[k]));
    }
  }
  if (x.size() >= 3) {
    out.growth_diagnostic = linear_fit(x, y).slope;
  } else {
    // Too few occupied shells to see growth: a finite sum.
    out.growth_diagnostic = -std::numeric_limits<double>::infinity();
  }
  out.diverging = out.growth_diagnostic >= -kDivergenceTolerance;
  return out;
}

PoincareResult poincare_series(const FuchsianGroup& group, Point z1, Point z2, double s, double r_max) {
  return poincare_series(enumerate_orbit(group, z1, z2, r_max), s);
}

CriticalExponent critical_exponent(const OrbitEnumeration& orbit) {
  CriticalExponent out;
  out.points = orbit.elements.size();
  out.wide = out.points < 100;
  std::vector<double> dist;
  for (const auto& e : orbit.elements) dist.push_back(e.distance);
  std::vector<double> x, y;
  for (double r = orbit.r_max / 2; r <= orbit.r_max + 1e-12; r += 0.25) {
    const auto count = std::upper_bound(dist.begin(), dist.end(), r) - dist.begin();
    if (count > 0) {
      x.push_back(r);
      y.push_back(std::log(static_cast<double>(count)));
    }
  }
  if (x.size() < 3) throw InvalidInput("critical exponent needs orbit points across the fitting range");
  const LinearFit fit = linear_fit(x, y);
  out.delta = fit.slope;
  out.stderr_ = fit.slope_stderr;
  return out;
}

CriticalExponent critical_exponent(const FuchsianGroup& group, Point z1, Point z2, double r_max) {
  return critical_exponent(enumerate_orbit(group, z1, z2, r_max));
}

double injectivity_radius(const FuchsianGroup& group, Point z, double search) {
  double best = search;
  for (const auto& e : enumerate_orbit(group, z, z, search).elements)
    if (!near_identity(e.g, 1e-9)) best = std::min(best, e.distance);
  return best / 2;
}

}  // namespace weylwalk
