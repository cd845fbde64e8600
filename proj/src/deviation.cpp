#include "weylwalk/deviation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "weylwalk/parallel.hpp"
#include "weylwalk/stats.hpp"

namespace weylwalk {

namespace {

std::vector<GroupElement> sample_increments(const MeasureSpec& mu, int count, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  std::vector<GroupElement> incs;
  incs.reserve(count);
  for (int i = 0; i < count; ++i) incs.push_back(mu.sample(rng));
  return incs;
}

// Limit flag of the product incs[begin] ... incs[begin + length - 1].
struct TailFlag {
  FlagPoint flag;
  double gap = 0.0;
};

TailFlag tail_flag(const std::vector<GroupElement>& incs, std::size_t begin, int length) {
  const int d = incs.front().dim();
  WalkState s = WalkState::start(d, CounterRng());
  Matrix half;
  for (int j = 0; j < length; ++j) {
    s = advance_by(std::move(s), incs[begin + j]);
    if (j + 1 == length / 2) half = s.factored.k;
  }
  FlagPoint flag(s.factored.k);
  const double gap = half.size() ? flag_distance(flag, FlagPoint(half)) : 0.0;
  return {flag, gap};
}

double max_root_gap(const ChamberVector& t) { return t[0] - t[t.dim() - 1]; }

}  // namespace

double DeviationSeries::occupancy(double r) const {
  if (dev.empty()) return 0.0;
  const auto hits = std::count_if(dev.begin(), dev.end(), [r](double v) { return v <= r; });
  return static_cast<double>(hits) / static_cast<double>(dev.size());
}

double DeviationSeries::liminf_proxy(double r, double window) const {
  const int n = static_cast<int>(dev.size());
  if (n == 0) return 0.0;
  const int first = std::max(1, static_cast<int>(std::ceil((1.0 - window) * n)));
  int count = 0;
  double worst = 1.0;
  for (int m = 1; m <= n; ++m) {
    if (dev[m - 1] <= r) ++count;
    if (m >= first) worst = std::min(worst, static_cast<double>(count) / m);
  }
  return worst;
}

StepDeviation step_deviation(const Vector& t, const Matrix& pulled_frame) {
  const int d = static_cast<int>(t.size());
  StepDeviation out;
  out.ratio = Matrix::Zero(d, d);
  const auto lu = lu_no_pivoting(pulled_frame, 1e-14);
  if (!lu) {
    out.transverse = false;
    out.dev = std::numeric_limits<double>::infinity();
    return out;
  }
  const Matrix& lower = lu->lower;
  // a_t L a_-t: the flag of a_t * frame, with entries shrinking below the diagonal.
  Matrix contracted = lower;
  for (int r = 0; r < d; ++r)
    for (int c = 0; c < r; ++c) contracted(r, c) = lower(r, c) * std::exp(t(r) - t(c));
  Eigen::HouseholderQR<Matrix> qr(contracted);
  Matrix upper = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int r = 0; r < d; ++r)
    if (upper(r, r) < 0.0) upper.row(r) *= -1.0;
  // a_-t k_i^T k_inf a_t = L (a_-t R a_t)^-1.
  Matrix conj = upper;
  for (int r = 0; r < d; ++r)
    for (int c = r + 1; c < d; ++c) conj(r, c) = upper(r, c) * std::exp(t(c) - t(r));
  const Matrix rel = conj.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(lower);
  out.dev = cartan_decompose_scaled(Vector::Zero(d), rel).t.norm();
  // k_i^T k_inf = (a_t L a_-t) R^-1, rescaled entrywise by exp(t_c - t_r).
  const Matrix rinv = upper.triangularView<Eigen::Upper>().solve(Matrix::Identity(d, d));
  for (int r = 0; r < d; ++r) {
    for (int c = 0; c < d; ++c) {
      if (r == c) continue;
      double acc = 0.0;
      for (int j = 0; j <= std::min(r, c); ++j) {
        // contracted(r, j) rinv(j, c) exp(t_c - t_r), grouped to avoid overflow.
        const double l = r == j ? 1.0 : lower(r, j);
        acc += l * rinv(j, c) * std::exp(t(c) - t(j));
      }
      out.ratio(r, c) = std::abs(acc);
    }
  }
  return out;
}

DeviationSeries deviation_series(const MeasureSpec& mu, int n, std::uint64_t seed, int burn) {
  if (n < 1) throw InvalidInput("deviation_series needs n >= 1");
  if (burn < 0) burn = default_burn(n);
  if (burn < 2) throw InvalidInput("deviation_series needs a burn-in of at least 2 steps");
  const int d = mu.dim();
  const auto incs = sample_increments(mu, n + burn, seed);

  DeviationSeries out;
  out.seed = seed;
  out.burn = burn;
  out.t.reserve(n);
  std::vector<Matrix> lefts;
  lefts.reserve(n);
  WalkState s = WalkState::start(d, CounterRng());
  for (int i = 0; i < n; ++i) {
    s = advance_by(std::move(s), incs[i]);
    out.t.push_back(s.factored.t);
    lefts.push_back(s.factored.l);
  }
  const TailFlag tail = tail_flag(incs, n, burn);
  out.limit_gap = tail.gap;
  out.unstable = tail.gap > 0.1;

  out.dev.assign(n, 0.0);
  out.angular_ratio.assign(n, Matrix());
  FlagPoint shifted = tail.flag;  // xi_{T^i b}
  for (int i = n; i >= 1; --i) {
    const StepDeviation sd = step_deviation(out.t[i - 1].values(), lefts[i - 1] * shifted.frame());
    out.dev[i - 1] = sd.dev;
    out.angular_ratio[i - 1] = sd.ratio;
    shifted = shifted.act(incs[i - 1].matrix());
  }
  return out;
}

DensityCurve density_curve_from(const std::vector<DeviationSeries>& series, const std::vector<double>& r_grid,
                                double window) {
  if (!std::is_sorted(r_grid.begin(), r_grid.end())) throw InvalidInput("R grid must be sorted ascending");
  DensityCurve curve;
  curve.grid = r_grid;
  curve.n_traj = static_cast<int>(series.size());
  curve.n_steps = series.empty() ? 0 : static_cast<int>(series.front().dev.size());
  for (const auto& s : series) {
    if (s.unstable) {
      ++curve.excluded_unstable;
      continue;
    }
    std::vector<double> row;
    for (double r : r_grid) row.push_back(s.liminf_proxy(r, window));
    curve.per_seed.push_back(std::move(row));
  }
  for (std::size_t j = 0; j < r_grid.size(); ++j) {
    std::vector<double> col;
    for (const auto& row : curve.per_seed) col.push_back(row[j]);
    curve.density_p10.push_back(col.empty() ? 0.0 : quantile(col, 0.1));
    curve.density_median.push_back(col.empty() ? 0.0 : quantile(col, 0.5));
  }
  return curve;
}

DensityCurve density_curve(const MeasureSpec& mu, const std::vector<double>& r_grid, int n, int n_traj,
                           std::uint64_t master_seed, double window, int burn) {
  const auto series = parallel_map<DeviationSeries>(
      n_traj, [&](std::size_t j) { return deviation_series(mu, n, stream_key(master_seed, j), burn); });
  DensityCurve curve = density_curve_from(series, r_grid, window);
  curve.master_seed = master_seed;
  return curve;
}

std::vector<AngularEntry> angular_rate_check(const DeviationSeries& s, double eps, int batches) {
  std::vector<AngularEntry> out;
  if (s.angular_ratio.empty()) return out;
  const int d = static_cast<int>(s.angular_ratio.front().rows());
  const int n = static_cast<int>(s.angular_ratio.size());
  const int batch_len = std::max(1, n / batches);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      if (i == j) continue;
      AngularEntry e;
      e.i = i + 1;
      e.j = j + 1;
      e.in_claim = i > j;
      std::vector<double> values;
      for (const Matrix& m : s.angular_ratio)
        if (m.size() && std::isfinite(m(i, j))) values.push_back(m(i, j));
      if (values.empty()) {
        out.push_back(e);
        continue;
      }
      e.envelope = quantile(values, 1.0 - eps);
      std::vector<double> centers, medians;
      for (int b = 0; b + batch_len <= n; b += batch_len) {
        std::vector<double> logs;
        for (int k = b; k < b + batch_len; ++k) {
          const double v = s.angular_ratio[k](i, j);
          if (v > 0.0 && std::isfinite(v)) logs.push_back(std::log(v));
        }
        if (!logs.empty()) {
          centers.push_back(b + 0.5 * batch_len);
          medians.push_back(quantile(logs, 0.5));
        }
      }
      const LinearFit fit = linear_fit(centers, medians);
      e.log_slope = fit.slope;
      e.p_value = fit.p_value;
      e.growing = fit.slope > 0.0 && fit.p_value < 0.05;
      out.push_back(e);
    }
  }
  return out;
}

BirkhoffReport birkhoff_flat_distance(const MeasureSpec& mu, const OppositeFlag& minus, int n, std::uint64_t seed,
                                      const std::vector<int>& sample_steps, double r, int burn, double max_gap) {
  if (n < 1 || burn < 2) throw InvalidInput("birkhoff_flat_distance needs n >= 1 and burn >= 2");
  const int d = mu.dim();
  const auto incs = sample_increments(mu, n + burn, seed);
  const std::set<int> wanted(sample_steps.begin(), sample_steps.end());
  for (int step : wanted)
    if (step < 1 || step > n) throw InvalidInput("sample step outside 1..n");

  // Forward pass: factored products at sampled steps and pulled-back opposite flags.
  std::vector<CartanTriple> sampled;
  std::vector<OppositeFlag> pulled(n + 1);
  pulled[0] = minus;
  WalkState s = WalkState::start(d, CounterRng());
  for (int i = 1; i <= n + burn; ++i) {
    s = advance_by(std::move(s), incs[i - 1]);
    if (i <= n) pulled[i] = pulled[i - 1].act(incs[i - 1].inverse().matrix());
    if (wanted.count(i)) sampled.push_back(s.factored);
  }
  const FlagPoint xi_b(s.factored.k);

  BirkhoffReport rep;
  std::optional<MaximalFlat> flat_b;
  if (auto pair = is_transverse(minus, xi_b)) flat_b = flat_from_flags(*pair);

  auto flat_distance_from_identity = [&](const OppositeFlag& m, const FlagPoint& p) -> std::optional<double> {
    auto pair = is_transverse(m, p);
    if (!pair) return std::nullopt;
    return distance_to_flat(GroupElement::identity(d), flat_from_flags(*pair)).distance;
  };

  std::size_t idx = 0;
  for (int step : wanted) {
    const CartanTriple& x = sampled[idx++];
    const auto rhs = flat_distance_from_identity(pulled[step], tail_flag(incs, step, burn).flag);
    if (!rhs || !flat_b) {
      ++rep.skipped_transversality;
      continue;
    }
    if (max_root_gap(x.t) > max_gap) {
      ++rep.skipped_conditioning;
      continue;
    }
    const double lhs = distance_to_flat(x, *flat_b).distance;
    rep.steps.push_back(step);
    rep.lhs.push_back(lhs);
    rep.rhs.push_back(*rhs);
    rep.max_residual = std::max(rep.max_residual, std::abs(lhs - *rhs));
  }

  // Birkhoff sequence over all steps, with xi_{T^i b} from the backward recursion.
  rep.flat_distance.assign(n, std::numeric_limits<double>::infinity());
  FlagPoint shifted = tail_flag(incs, n, burn).flag;
  int hits = 0;
  for (int i = n; i >= 1; --i) {
    if (const auto v = flat_distance_from_identity(pulled[i], shifted)) rep.flat_distance[i - 1] = *v;
    if (rep.flat_distance[i - 1] <= r) ++hits;
    shifted = shifted.act(incs[i - 1].matrix());
  }
  rep.indicator_mean = static_cast<double>(hits) / n;
  return rep;
}

std::vector<FlagPoint> stationary_samples(const MeasureSpec& mu, int n_samples, std::uint64_t master_seed,
                                          int length, int* discarded) {
  const int d = mu.dim();
  constexpr int kCloud = 32;
  std::vector<Matrix> cloud;
  CounterRng frame_rng(0xc10dULL, 0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int c = 0; c < kCloud; ++c) {
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = normal(frame_rng);
    cloud.push_back(orthonormalize(m));
  }
  struct Sample {
    FlagPoint flag;
    bool ok = true;
  };
  const auto samples = parallel_map<Sample>(n_samples, [&](std::size_t j) {
    WalkState s = WalkState::start(d, CounterRng(master_seed, j));
    for (int step = 0; step < length; ++step) s = advance(std::move(s), mu);
    Sample out{FlagPoint(s.factored.k), true};
    for (const Matrix& frame : cloud) {
      const auto pushed = push_flag_diagonal(s.factored.t.values(), s.factored.l * frame);
      if (!pushed || flag_distance(pushed->act(s.factored.k), out.flag) > 1e-4) {
        out.ok = false;
        break;
      }
    }
    return out;
  });
  std::vector<FlagPoint> out;
  int dropped = 0;
  for (const auto& s : samples) {
    if (s.ok)
      out.push_back(s.flag);
    else
      ++dropped;
  }
  if (discarded) *discarded = dropped;
  return out;
}

StationaryMass stationary_flat_mass(const std::vector<FlagPoint>& samples, const OppositeFlag& minus,
                                    const std::vector<double>& r_grid) {
  if (!std::is_sorted(r_grid.begin(), r_grid.end())) throw InvalidInput("R' grid must be sorted ascending");
  StationaryMass out;
  out.r_grid = r_grid;
  const int d = minus.dim();
  const auto dist = parallel_map<double>(samples.size(), [&](std::size_t j) {
    auto pair = is_transverse(minus, samples[j]);
    if (!pair) return std::numeric_limits<double>::infinity();
    return distance_to_flat(GroupElement::identity(d), flat_from_flags(*pair)).distance;
  });
  out.rejected_transversality =
      static_cast<int>(std::count(dist.begin(), dist.end(), std::numeric_limits<double>::infinity()));
  for (double r : r_grid) {
    const auto hits = std::count_if(dist.begin(), dist.end(), [r](double v) { return v <= r; });
    const double frac = samples.empty() ? 0.0 : static_cast<double>(hits) / static_cast<double>(samples.size());
    out.fraction.push_back(frac);
    if (out.smallest_r_two_thirds < 0.0 && frac > 2.0 / 3.0) out.smallest_r_two_thirds = r;
  }
  return out;
}

std::vector<OppositeFlag> spread_opposite_flags(int d, int count) {
  std::vector<OppositeFlag> out;
  for (int j = 0; j < count; ++j) {
    Matrix rot = Matrix::Identity(d, d);
    rot.topLeftCorner(2, 2) = rotation2(std::acos(-1.0) * j / count);
    out.push_back(OppositeFlag::standard(d).act(rot));
  }
  return out;
}

double c0_envelope(const std::vector<double>& dev, const std::vector<double>& flat_distance) {
  double worst = 0.0;
  for (std::size_t i = 0; i < std::min(dev.size(), flat_distance.size()); ++i)
    if (std::isfinite(dev[i]) && std::isfinite(flat_distance[i]))
      worst = std::max(worst, dev[i] / (flat_distance[i] + 1.0));
  return worst;
}

}  // namespace weylwalk
