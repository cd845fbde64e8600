#include "weylwalk/renewal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "weylwalk/parallel.hpp"
#include "weylwalk/stats.hpp"

namespace weylwalk {

namespace {

// Fills x[0..steps] with the observable along one trajectory.
using PathFn = std::function<void(CounterRng, int, std::vector<double>&)>;

PathFn cartan_path(const MeasureSpec& mu, const GroupElement& g0) {
  return [&mu, g0](CounterRng rng, int steps, std::vector<double>& x) {
    WalkState s = WalkState::start_at(g0, rng);
    x.resize(steps + 1);
    x[0] = scalar_observable(s.factored.t);
    for (int m = 1; m <= steps; ++m) {
      s = advance(std::move(s), mu);
      x[m] = scalar_observable(s.factored.t);
    }
  };
}

PathFn log_norm_path(const MeasureSpec& mu, const Vector& v) {
  return [&mu, v](CounterRng rng, int steps, std::vector<double>& x) {
    x.resize(steps + 1);
    double acc = std::log(v.norm());
    Vector w = v / v.norm();
    x[0] = acc;
    for (int m = 1; m <= steps; ++m) {
      w = mu.sample(rng).matrix().transpose() * w;
      const double nrm = w.norm();
      acc += std::log(nrm);
      w /= nrm;
      x[m] = acc;
    }
  };
}

Pilot run_pilot(const PathFn& path, std::uint64_t master_seed) {
  constexpr int kTraj = 200;
  constexpr int kSteps = 200;
  const std::uint64_t key = mix64(master_seed ^ 0x70696c6f74ULL);
  const auto finals = parallel_map<double>(kTraj, [&](std::size_t j) {
    std::vector<double> x;
    path(CounterRng(key, j), kSteps, x);
    return x.back() - x.front();
  });
  return {sample_mean(finals) / kSteps, sample_stddev(finals) / std::sqrt(static_cast<double>(kSteps))};
}

VisitCounter count_visits(const PathFn& path, const Interval& interval, const std::vector<double>& shifts,
                          int horizon, int n_traj, std::uint64_t master_seed) {
  if (!(interval.hi >= interval.lo)) throw InvalidInput("interval needs hi >= lo");
  if (shifts.empty()) throw InvalidInput("shift grid is empty");
  if (n_traj < 2) throw InvalidInput("need at least two trajectories");
  VisitCounter out;
  out.interval = interval;
  out.shifts = shifts;
  out.master_seed = master_seed;
  const Pilot pilot = run_pilot(path, master_seed);
  out.lambda_hat = pilot.lambda_hat;
  out.horizon = horizon > 0 ? horizon : renewal_horizon(pilot, interval, shifts);
  const int h = out.horizon;
  struct PerTraj {
    std::vector<int> counts;
    bool reentry = false;
  };
  const auto runs = parallel_map<PerTraj>(n_traj, [&](std::size_t j) {
    std::vector<double> x;
    path(CounterRng(master_seed, j), 2 * h, x);
    PerTraj r;
    r.counts.assign(shifts.size(), 0);
    for (int m = 0; m <= 2 * h; ++m) {
      for (std::size_t s = 0; s < shifts.size(); ++s) {
        if (x[m] >= interval.lo + shifts[s] && x[m] <= interval.hi + shifts[s]) {
          if (m <= h)
            ++r.counts[s];
          else
            r.reentry = true;
        }
      }
    }
    return r;
  });
  out.counts.assign(shifts.size(), std::vector<int>(n_traj));
  int reentries = 0;
  for (int j = 0; j < n_traj; ++j) {
    for (std::size_t s = 0; s < shifts.size(); ++s) out.counts[s][j] = runs[j].counts[s];
    reentries += runs[j].reentry;
  }
  out.reentry_probability = static_cast<double>(reentries) / n_traj;
  out.lower_bound = out.reentry_probability >= 1e-3;
  for (const auto& row : out.counts) {
    const std::vector<double> vals(row.begin(), row.end());
    out.mean.push_back(sample_mean(vals));
    out.stderr_.push_back(sample_stddev(vals) / std::sqrt(static_cast<double>(n_traj)));
  }
  return out;
}

}  // namespace

double VisitCounter::tail_slope() const {
  const std::size_t half = shifts.size() / 2;
  std::vector<double> x(shifts.begin() + half, shifts.end());
  std::vector<double> y(mean.begin() + half, mean.end());
  if (x.size() < 3) throw InvalidInput("tail_slope needs at least six shifts");
  return linear_fit(x, y).slope;
}

std::vector<double> VisitCounter::tail_distribution(std::size_t s) const {
  const auto& row = counts.at(s);
  const int top = row.empty() ? 0 : *std::max_element(row.begin(), row.end());
  std::vector<double> tail(top + 1, 0.0);
  for (int c : row)
    for (int k = 0; k <= c; ++k) tail[k] += 1.0;
  for (double& v : tail) v /= static_cast<double>(row.size());
  return tail;
}

int renewal_horizon(const Pilot& p, const Interval& interval, const std::vector<double>& shifts) {
  if (!(p.lambda_hat > 0.0)) throw InvalidInput("observable has no positive drift; horizon undefined");
  const double far = *std::max_element(shifts.begin(), shifts.end()) + interval.hi;
  const double crossing = std::max(1.0, far / p.lambda_hat);
  const double margin = 10.0 * p.sigma_hat * std::sqrt(crossing);
  return 3 * static_cast<int>(std::ceil(std::max(far + margin, 1.0) / p.lambda_hat));
}

VisitCounter visit_counts(const MeasureSpec& mu, const Interval& interval, const std::vector<double>& shifts,
                          int horizon, int n_traj, std::uint64_t master_seed) {
  return count_visits(cartan_path(mu, GroupElement::identity(mu.dim())), interval, shifts, horizon, n_traj,
                      master_seed);
}

VisitCounter log_norm_renewal(const MeasureSpec& mu, const Vector& v, const Interval& interval,
                              const std::vector<double>& shifts, int horizon, int n_traj,
                              std::uint64_t master_seed) {
  if (v.size() != mu.dim() || !(v.norm() > 0.0)) throw InvalidInput("log_norm_renewal needs a nonzero vector");
  return count_visits(log_norm_path(mu, v), interval, shifts, horizon, n_traj, master_seed);
}

HittingCurve hitting_probability(const MeasureSpec& mu, const Interval& interval, const std::vector<double>& shifts,
                                 const GroupElement& g0, int horizon, int n_traj, std::uint64_t master_seed) {
  if (horizon < 1 || n_traj < 1) throw InvalidInput("hitting_probability needs a horizon and trajectories");
  const PathFn path = cartan_path(mu, g0);
  const auto hits = parallel_map<std::vector<char>>(n_traj, [&](std::size_t j) {
    std::vector<double> x;
    path(CounterRng(master_seed, j), horizon, x);
    std::vector<char> hit(shifts.size(), 0);
    for (double v : x)
      for (std::size_t s = 0; s < shifts.size(); ++s)
        if (v >= interval.lo + shifts[s] && v <= interval.hi + shifts[s]) hit[s] = 1;
    return hit;
  });
  HittingCurve out{shifts, std::vector<double>(shifts.size(), 0.0), horizon};
  for (const auto& h : hits)
    for (std::size_t s = 0; s < shifts.size(); ++s) out.probability[s] += h[s];
  for (double& p : out.probability) p /= n_traj;
  return out;
}

double minimal_hitting_length(const MeasureSpec& mu, const std::vector<double>& lengths,
                              const std::vector<double>& shifts, const std::vector<GroupElement>& starts,
                              int horizon, int n_traj, std::uint64_t master_seed, double target) {
  for (double len : lengths) {
    bool ok = true;
    for (std::size_t g = 0; g < starts.size() && ok; ++g) {
      const auto curve =
          hitting_probability(mu, {0.0, len}, shifts, starts[g], horizon, n_traj, stream_key(master_seed, g));
      ok = *std::min_element(curve.probability.begin(), curve.probability.end()) >= target;
    }
    if (ok) return len;
  }
  return -1.0;
}

int EscapeTable::uniform_n0(double eps) const {
  for (std::size_t k = 0; k < n0_grid.size(); ++k) {
    bool ok = true;
    for (const auto& row : probability) ok = ok && row[k] >= 1.0 - eps;
    if (ok) return n0_grid[k];
  }
  return -1;
}

EscapeTable escape_probability(const MeasureSpec& mu, double r, const std::vector<int>& n0_grid,
                               const std::vector<GroupElement>& starts, int horizon, int n_traj,
                               std::uint64_t master_seed) {
  if (!(r > 0.0)) throw InvalidInput("escape_probability needs R > 0");
  if (horizon < 1 || n_traj < 1) throw InvalidInput("escape_probability needs a horizon and trajectories");
  EscapeTable out;
  out.r = r;
  out.n0_grid = n0_grid;
  out.horizon = horizon;
  for (std::size_t g = 0; g < starts.size(); ++g) {
    const PathFn path = cartan_path(mu, starts[g]);
    // Last step with x_m < x_0 + R, or -1.
    const auto last_low = parallel_map<int>(n_traj, [&](std::size_t j) {
      std::vector<double> x;
      path(CounterRng(stream_key(master_seed, g), j), horizon, x);
      int last = -1;
      for (int m = 0; m <= horizon; ++m)
        if (x[m] < x[0] + r) last = m;
      return last;
    });
    std::vector<double> row;
    for (int n0 : n0_grid) {
      if (n0 > horizon) {
        row.push_back(0.0);
        continue;
      }
      const auto ok = std::count_if(last_low.begin(), last_low.end(), [n0](int last) { return last < n0; });
      row.push_back(static_cast<double>(ok) / n_traj);
    }
    out.probability.push_back(std::move(row));
  }
  return out;
}

std::vector<GroupElement> random_starts(int d, int count, double spread, std::uint64_t seed) {
  std::vector<GroupElement> out;
  CounterRng rng(seed, 0);
  auto random_rotation = [&] {
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = 2.0 * rng.uniform() - 1.0;
    Matrix q = orthonormalize(m);
    if (q.determinant() < 0.0) q.col(0) *= -1.0;
    return q;
  };
  for (int c = 0; c < count; ++c) {
    Vector s = Vector::Zero(d);
    const double a = spread * rng.uniform();
    s(0) = a;
    s(d - 1) = -a;
    out.push_back(GroupElement::from_unimodular(random_rotation() * GroupElement::diagonal_exp(s).matrix() *
                                                random_rotation()));
  }
  return out;
}

}  // namespace weylwalk
