#include <algorithm>
#include <cmath>
#include <numbers>

#include "weylwalk/parallel.hpp"
#include "weylwalk/quotient.hpp"
#include "weylwalk/stats.hpp"

namespace weylwalk {

namespace {

struct Occupation {
  double full = 0.0;
  double half = 0.0;
  double last = 0.0;
  int flagged = 0;
};

GreenEstimate summarize(const std::vector<Occupation>& occ, double horizon, double last_span) {
  GreenEstimate g;
  std::vector<double> full;
  double half = 0.0, last = 0.0;
  for (const auto& o : occ) {
    full.push_back(o.full);
    half += o.half;
    last += o.last;
    g.flagged_reductions += o.flagged;
  }
  const double n = static_cast<double>(occ.size());
  g.estimate = sample_mean(full);
  g.estimate_half = half / n;
  g.stderr_ = occ.size() > 1 ? sample_stddev(full) / std::sqrt(n) : 0.0;
  g.global_rate = g.estimate / horizon;
  g.last_decile_rate = last / n / last_span;
  g.tail_flag = g.last_decile_rate > 1e-3;
  return g;
}

// Golub-Welsch nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  Matrix j = Matrix::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double b = k / std::sqrt(4.0 * k * k - 1.0);
    j(k, k - 1) = b;
    j(k - 1, k) = b;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(j);
  x.resize(n);
  w.resize(n);
  for (int k = 0; k < n; ++k) {
    x[k] = es.eigenvalues()(k);
    w[k] = 2.0 * es.eigenvectors()(0, k) * es.eigenvectors()(0, k);
  }
}

}  // namespace

GreenEstimate walk_green(const FuchsianGroup& group, const MeasureSpec& mu, const std::vector<GroupElement>& starts,
                         const BallTarget& f, int n_max, int n_traj, std::uint64_t master_seed) {
  if (mu.dim() != 2) throw InvalidInput("quotient walks need a measure on SL_2");
  if (n_max < 10 || n_traj < 1 || starts.empty()) throw InvalidInput("walk_green needs n_max >= 10, trajectories and starts");
  const int last_from = n_max - n_max / 10;
  const BallTarget target = reduced_target(group, f);
  const auto occ = parallel_map<Occupation>(starts.size() * n_traj, [&](std::size_t idx) {
    const std::size_t s = idx / n_traj;
    const std::size_t j = idx % n_traj;
    CounterRng rng(stream_key(master_seed, s), j);
    Occupation o;
    QuotientPoint x = group.reduce(starts[s]);
    for (int m = 0; m <= n_max; ++m) {
      if (m > 0) {
        x = group.reduce(x.rep.right(Mat2(mu.sample(rng).matrix())));
        o.flagged += x.flagged;
      }
      if (in_target(group, target, x.rep)) {
        o.full += 1.0;
        if (m <= n_max / 2) o.half += 1.0;
        if (m > last_from) o.last += 1.0;
      }
    }
    return o;
  });
  return summarize(occ, n_max + 1.0, n_max - last_from);
}

GreenEstimate geodesic_green(const FuchsianGroup& group, const GroupElement& x0, const BallTarget& f, double t_max,
                             double dt) {
  return geodesic_green(group, std::vector<GroupElement>{x0}, f, t_max, dt);
}

GreenEstimate geodesic_green(const FuchsianGroup& group, const std::vector<GroupElement>& starts,
                             const BallTarget& f, double t_max, double dt) {
  if (!(dt > 0.0) || dt > f.hyperbolic_radius() / 4 + 1e-15)
    throw InvalidInput("geodesic_green needs 0 < dt <= radius / 4 (hyperbolic)");
  if (!(t_max > 0.0) || starts.empty()) throw InvalidInput("geodesic_green needs t_max > 0 and starts");
  const int steps = static_cast<int>(std::ceil(t_max / dt));
  const int last_from = steps - std::max(1, steps / 10);
  const BallTarget target = reduced_target(group, f);
  Mat2 half_step = Mat2::Zero(), step = Mat2::Zero();
  half_step(0, 0) = std::exp(dt / 4);
  half_step(1, 1) = 1.0 / half_step(0, 0);
  step(0, 0) = std::exp(dt / 2);
  step(1, 1) = 1.0 / step(0, 0);
  const auto occ = parallel_map<Occupation>(starts.size(), [&](std::size_t s) {
    Occupation o;
    QuotientPoint x = group.reduce(Frame::from(Mat2(starts[s].matrix())).right(half_step));
    for (int m = 0; m < steps; ++m) {
      if (m > 0) {
        x = group.reduce(x.rep.right(step));
        o.flagged += x.flagged;
      }
      if (in_target(group, target, x.rep)) {
        o.full += dt;
        if (m < steps / 2) o.half += dt;
        if (m >= last_from) o.last += dt;
      }
    }
    return o;
  });
  return summarize(occ, steps * dt, (steps - last_from) * dt);
}

KAveragedGreen k_averaged_green(const FuchsianGroup& group, const GroupElement& g1, const BallTarget& f,
                                double t_max, int n_k, double dt) {
  const double eps = f.hyperbolic_radius();
  if (!(eps > 0.0)) throw InvalidInput("k_averaged_green needs a ball of positive radius");
  if (n_k < 2) throw InvalidInput("k_averaged_green needs n_k >= 2");
  if (dt <= 0.0) dt = eps / 20;
  const double pi = std::numbers::pi;
  const Mat2 g = Mat2(g1.matrix());
  const Point z1 = orbit_point(g);
  const OrbitEnumeration lifts = enumerate_orbit(group, z1, f.center, t_max + eps);
  KAveragedGreen out;
  out.injectivity_ok = eps < injectivity_radius(group, f.center);

  std::vector<std::pair<double, double>> arcs;
  const Mat2 g_inv = g.inverse();
  for (const auto& e : lifts.elements) {
    if (e.distance <= 1.0 + eps) throw InvalidInput("ball centre too close to the start: need d(z1, z2) > 1 + eps");
    const Point w = mobius(g_inv, mobius(e.g, f.center));
    const double psi = std::arg((w - Point(0.0, 1.0)) / (w + Point(0.0, 1.0)));
    double centre = std::fmod(-psi / 2, pi);
    if (centre < 0.0) centre += pi;
    const double half = 0.5 * std::asin(std::min(1.0, std::sinh(eps) / std::sinh(e.distance)));
    // Split arcs that wrap around theta = 0 ~ pi.
    double a = centre - half, b = centre + half;
    if (a < 0.0) {
      arcs.emplace_back(a + pi, pi);
      a = 0.0;
    }
    if (b > pi) {
      arcs.emplace_back(0.0, b - pi);
      b = pi;
    }
    arcs.emplace_back(a, b);
  }
  std::sort(arcs.begin(), arcs.end());
  std::vector<std::pair<double, double>> merged;
  for (const auto& a : arcs) {
    if (!merged.empty() && a.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, a.second);
    else
      merged.push_back(a);
  }
  out.arcs = static_cast<int>(merged.size());

  std::vector<double> x, w;
  gauss_legendre(n_k, x, w);
  struct Node {
    double theta;
    double weight;
  };
  std::vector<Node> nodes;
  for (const auto& [a, b] : merged) {
    const double mid = 0.5 * (a + b);
    const double hw = 0.5 * (b - a);
    for (int k = 0; k < n_k; ++k) {
      const double phi = x[k] * pi / 2;
      nodes.push_back({mid + hw * std::sin(phi), w[k] * (pi / 2) * hw * std::cos(phi)});
    }
  }
  const auto values = parallel_map<double>(nodes.size(), [&](std::size_t i) {
    const GroupElement start = GroupElement::from_unimodular(g1.matrix() * rotation2(nodes[i].theta));
    return geodesic_green(group, start, f, t_max, dt).estimate;
  });
  for (std::size_t i = 0; i < nodes.size(); ++i) out.lhs += nodes[i].weight * values[i] / pi;

  if (group.is_trivial()) {
    out.rhs = std::exp(-hyperbolic_distance(z1, f.center));
  } else {
    out.rhs = poincare_series(enumerate_orbit(group, z1, f.center, t_max), 1.0).partial_sum;
  }
  out.ratio = out.lhs / out.rhs;
  return out;
}

// Dichotomy ---------------------------------------------------------------------

std::string to_string(Signature s) {
  switch (s) {
    case Signature::recurrent:
      return "recurrent";
    case Signature::transient:
      return "transient";
    case Signature::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::both_recurrent_signature:
      return "both_recurrent_signature";
    case Verdict::both_transient_signature:
      return "both_transient_signature";
    case Verdict::inconsistent:
      return "inconsistent";
    case Verdict::inconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

Signature classify(const GreenEstimate& g) {
  if (g.tail_flag && g.global_rate > 0.0 && g.last_decile_rate >= 0.5 * g.global_rate) return Signature::recurrent;
  if (!g.tail_flag && g.estimate > 0.0 && std::abs(g.estimate - g.estimate_half) < 0.05 * g.estimate)
    return Signature::transient;
  return Signature::inconclusive;
}

std::vector<GroupElement> spread_starts(Point center, double spread, int count, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  const GroupElement base = frame_at(center);
  std::vector<GroupElement> out;
  for (int c = 0; c < count; ++c) {
    const double theta = std::numbers::pi * rng.uniform();
    const double phi = std::numbers::pi * rng.uniform();
    Vector s(2);
    s << spread / 2, -spread / 2;
    const Matrix m = base.matrix() * rotation2(theta) * GroupElement::diagonal_exp(s).matrix() * rotation2(phi);
    out.push_back(GroupElement::from_unimodular(m));
  }
  return out;
}

DichotomyReport dichotomy_experiment(const FuchsianGroup& group, const MeasureSpec& mu, const BallTarget& f,
                                     const DichotomyParams& p) {
  const auto starts = spread_starts(f.center, p.start_spread, p.starts, p.seed);
  DichotomyReport rep;
  rep.walk = walk_green(group, mu, starts, f, p.n_max, p.n_traj, p.seed);
  const double dt = p.dt > 0.0 ? p.dt : f.hyperbolic_radius() / 4;
  rep.geodesic = geodesic_green(group, starts, f, p.t_max, dt);
  rep.walk_signature = classify(rep.walk);
  rep.geodesic_signature = classify(rep.geodesic);
  using S = Signature;
  if (rep.walk_signature == S::recurrent && rep.geodesic_signature == S::recurrent)
    rep.verdict = Verdict::both_recurrent_signature;
  else if (rep.walk_signature == S::transient && rep.geodesic_signature == S::transient)
    rep.verdict = Verdict::both_transient_signature;
  else if (rep.walk_signature != S::inconclusive && rep.geodesic_signature != S::inconclusive)
    rep.verdict = Verdict::inconsistent;
  else
    rep.verdict = Verdict::inconclusive;
  return rep;
}

// Volume --------------------------------------------------------------------------

std::vector<double> volume_density_ratio(const std::vector<double>& t_grid) {
  std::vector<double> out;
  for (double t : t_grid) {
    if (t < 0.0) throw InvalidInput("volume density needs t >= 0");
    out.push_back(0.5 * (1.0 - std::exp(-2.0 * t)));
  }
  return out;
}

VolumeCheck volume_monte_carlo(double r, std::int64_t samples, std::uint64_t seed) {
  if (!(r > 0.0) || samples < 2) throw InvalidInput("volume_monte_carlo needs r > 0 and samples");
  const double rho2 = std::pow(std::tanh(r / 2), 2);
  constexpr std::int64_t kChunks = 64;
  struct Moments {
    double sum = 0.0;
    double sum2 = 0.0;
    std::int64_t n = 0;
  };
  const auto parts = parallel_map<Moments>(kChunks, [&](std::size_t c) {
    CounterRng rng(seed, c);
    Moments m;
    const std::int64_t count = samples / kChunks + (static_cast<std::int64_t>(c) < samples % kChunks ? 1 : 0);
    for (std::int64_t i = 0; i < count; ++i) {
      const double x = 2.0 * rng.uniform() - 1.0;
      const double y = 2.0 * rng.uniform() - 1.0;
      const double q = x * x + y * y;
      double v = 0.0;
      if (q < rho2) v = 4.0 * 4.0 / ((1.0 - q) * (1.0 - q));  // square area 4 times the area element
      m.sum += v;
      m.sum2 += v * v;
      ++m.n;
    }
    return m;
  });
  Moments total;
  for (const auto& m : parts) {
    total.sum += m.sum;
    total.sum2 += m.sum2;
    total.n += m.n;
  }
  VolumeCheck out;
  const double n = static_cast<double>(total.n);
  out.monte_carlo = total.sum / n;
  out.stderr_ = std::sqrt(std::max(0.0, total.sum2 / n - out.monte_carlo * out.monte_carlo) / n);
  out.exact = 2.0 * std::numbers::pi * (std::cosh(r) - 1.0);
  out.relative_error = std::abs(out.monte_carlo - out.exact) / out.exact;
  return out;
}

}  // namespace weylwalk
