#include "weylwalk/walk.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "weylwalk/parallel.hpp"
#include "weylwalk/stats.hpp"

namespace weylwalk {

namespace {

constexpr int kReorthonormalizeEvery = 64;

void canonicalize_columns(Matrix& k, Matrix& l) {
  const Eigen::Index d = k.cols();
  for (Eigen::Index j = 0; j < d; ++j) {
    Eigen::Index lead = 0;
    while (lead < d - 1 && std::abs(k(lead, j)) < 1e-12) ++lead;
    if (k(lead, j) < 0.0) {
      k.col(j) *= -1.0;
      l.row(j) *= -1.0;
    }
  }
}

void append_double(std::string& out, double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
  out.push_back(',');
}

}  // namespace

// MeasureSpec -------------------------------------------------------------------

MeasureSpec::MeasureSpec(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw InvalidInput("measure needs at least one atom");
  dim_ = atoms_.front().element.dim();
  double total = 0.0;
  for (const Atom& a : atoms_) {
    if (a.element.dim() != dim_) throw InvalidInput("measure atoms have mixed dimensions");
    if (!(a.weight > 0.0) || !std::isfinite(a.weight)) throw InvalidInput("measure weights must be positive");
    total += a.weight;
    cumulative_.push_back(total);
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InvalidInput("measure weights sum to " + std::to_string(total) + ", expected 1");
  cumulative_.back() = 1.0;
}

const GroupElement& MeasureSpec::sample(CounterRng& rng) const {
  if (atoms_.size() == 1) return atoms_.front().element;
  const double u = rng.uniform();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), atoms_.size() - 1);
  return atoms_[idx].element;
}

MeasureSpec MeasureSpec::inverse() const {
  std::vector<Atom> inv;
  for (const Atom& a : atoms_) inv.push_back({a.element.inverse(), a.weight});
  return MeasureSpec(std::move(inv));
}

MeasureSpec MeasureSpec::transpose() const {
  std::vector<Atom> tr;
  for (const Atom& a : atoms_) tr.push_back({GroupElement::from_unimodular(a.element.matrix().transpose()), a.weight});
  return MeasureSpec(std::move(tr));
}

std::uint64_t MeasureSpec::hash() const {
  std::string text;
  for (const Atom& a : atoms_) {
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) append_double(text, a.element(i, j));
    append_double(text, a.weight);
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

MeasureSpec uniform_measure(const std::vector<GroupElement>& elements) {
  std::vector<Atom> atoms;
  for (const auto& g : elements) atoms.push_back({g, 1.0 / static_cast<double>(elements.size())});
  return MeasureSpec(std::move(atoms));
}

MeasureSpec dirac(const GroupElement& g) { return MeasureSpec({{g, 1.0}}); }

MeasureSpec reference_measure() {
  Matrix g1(2, 2);
  g1 << 2.0, 0.0, 0.0, 0.5;
  const double q = std::atan(1.0);
  const Matrix g2 = rotation2(q) * g1 * rotation2(-q);
  return uniform_measure({GroupElement(g1), GroupElement(g2)});
}

// Walk -------------------------------------------------------------------------

WalkState WalkState::start(int d, CounterRng rng) {
  WalkState s;
  s.factored = CartanTriple{Matrix::Identity(d, d), ChamberVector::normalized(Vector::Zero(d)),
                            Matrix::Identity(d, d), 0.0, true};
  s.k_aligned = Matrix::Identity(d, d);
  s.rng = rng;
  return s;
}

WalkState WalkState::start_at(const GroupElement& g0, CounterRng rng) {
  WalkState s;
  s.factored = cartan_decompose(g0);
  s.k_aligned = s.factored.k;
  s.rng = rng;
  return s;
}

Matrix align_frame(const Matrix& previous, const Matrix& next) {
  const Eigen::Index d = next.cols();
  const Vector overlap = (previous.transpose() * next).diagonal();
  Vector signs(d);
  for (Eigen::Index j = 0; j < d; ++j) signs(j) = overlap(j) < 0.0 ? -1.0 : 1.0;
  const double det_prev = previous.determinant();
  const double det_next = next.determinant() * signs.prod();
  if (det_prev * det_next < 0.0) {
    Eigen::Index weakest = 0;
    overlap.cwiseAbs().minCoeff(&weakest);
    signs(weakest) *= -1.0;
  }
  return next * signs.asDiagonal();
}

WalkState advance_by(WalkState s, const GroupElement& b) {
  const CartanTriple& cur = s.factored;
  // diag(e^t) (l b) is decomposed with the log scales kept separate.
  CartanTriple step = cartan_decompose_scaled(cur.t.values(), cur.l * b.matrix());
  Matrix k = cur.k * step.k;
  Matrix l = std::move(step.l);
  ++s.step;
  if (s.step % kReorthonormalizeEvery == 0) {
    k = orthonormalize(k);
    l = orthonormalize(l.transpose()).transpose();
  }
  canonicalize_columns(k, l);
  s.k_aligned = align_frame(s.k_aligned, k);
  s.factored = CartanTriple{std::move(k), std::move(step.t), std::move(l),
                            cur.logscale + step.logscale, step.degenerate};
  return s;
}

WalkState advance(WalkState s, const MeasureSpec& mu) {
  if (mu.dim() != s.factored.dim()) throw InvalidInput("measure and walk dimensions differ");
  const GroupElement& b = mu.sample(s.rng);
  return advance_by(std::move(s), b);
}

TrajectoryRecord trajectory(const MeasureSpec& mu, int n, std::uint64_t seed, bool keep_k) {
  if (n < 1) throw InvalidInput("trajectory length must be positive");
  TrajectoryRecord rec;
  rec.seed = seed;
  rec.n_steps = n;
  rec.t_seq.reserve(n);
  if (keep_k) rec.k_seq.reserve(n);
  WalkState s = WalkState::start(mu.dim(), CounterRng(seed, 0));
  for (int i = 0; i < n; ++i) {
    s = advance(std::move(s), mu);
    rec.t_seq.push_back(s.factored.t);
    if (keep_k) rec.k_seq.push_back(s.k_aligned);
  }
  return rec;
}

LyapunovEstimate lyapunov_estimate(const MeasureSpec& mu, int n, int n_traj, std::uint64_t master_seed) {
  if (n < 100) throw InvalidInput("lyapunov_estimate needs n >= 100");
  if (n_traj < 1) throw InvalidInput("lyapunov_estimate needs at least one trajectory");
  constexpr int kBatches = 10;
  const int d = mu.dim();
  struct PerTraj {
    Vector rate;
    std::vector<Vector> batch_rates;
  };
  const auto runs = parallel_map<PerTraj>(n_traj, [&](std::size_t i) {
    WalkState s = WalkState::start(d, CounterRng(master_seed, i));
    PerTraj out;
    Vector prev = Vector::Zero(d);
    const int batch_len = n / kBatches;
    for (int step = 1; step <= n; ++step) {
      s = advance(std::move(s), mu);
      if (step % batch_len == 0 && static_cast<int>(out.batch_rates.size()) < kBatches) {
        out.batch_rates.push_back((s.factored.t.values() - prev) / batch_len);
        prev = s.factored.t.values();
      }
    }
    out.rate = s.factored.t.values() / n;
    return out;
  });
  Vector mean = Vector::Zero(d);
  for (const auto& r : runs) mean += r.rate;
  mean /= n_traj;
  std::vector<Vector> batches;
  for (const auto& r : runs) batches.insert(batches.end(), r.batch_rates.begin(), r.batch_rates.end());
  Vector se = Vector::Zero(d);
  for (int j = 0; j < d; ++j) {
    std::vector<double> col;
    for (const auto& b : batches) col.push_back(b(j));
    se(j) = sample_stddev(col) / std::sqrt(static_cast<double>(col.size()));
  }
  LyapunovEstimate est{ChamberVector::normalized(mean), se, false};
  const double gap = est.mean.root(0);
  est.zariski_dense_signature = gap > 3.0 * (se(0) + se(1)) && gap > 0.0;
  return est;
}

LimitFlagEstimate limit_flag(const TrajectoryRecord& rec) {
  if (rec.k_seq.empty()) throw InvalidInput("limit_flag needs a record with k frames");
  const FlagPoint last(rec.k_seq.back());
  const FlagPoint half(rec.k_seq[rec.k_seq.size() / 2]);
  LimitFlagEstimate est{last, flag_distance(last, half), false};
  est.unstable = est.stability_gap > 0.1;
  return est;
}

std::vector<RootGrowth> root_growth_check(const TrajectoryRecord& rec, double tail_fraction) {
  const int n = static_cast<int>(rec.t_seq.size());
  if (n == 0) return {};
  const int d = rec.t_seq.front().dim();
  const int begin = std::clamp(static_cast<int>(std::floor(n * (1.0 - tail_fraction))), 0, n - 1);
  std::vector<RootGrowth> out;
  for (int r = 0; r + 1 < d; ++r) {
    std::vector<double> x, y;
    double lo = std::numeric_limits<double>::infinity();
    for (int i = begin; i < n; ++i) {
      const double v = rec.t_seq[i].root(r);
      x.push_back(i + 1);
      y.push_back(v);
      lo = std::min(lo, v);
    }
    const LinearFit fit = linear_fit(x, y);
    out.push_back({lo, fit.slope, lo > 0.0 && fit.slope > 1e-9});
  }
  return out;
}

ZariskiScreen zariski_screen(const MeasureSpec& mu, std::uint64_t seed, int n_steps) {
  ZariskiScreen screen;
  const TrajectoryRecord rec = trajectory(mu, n_steps, seed, false);
  screen.root_gaps_grow = true;
  for (const RootGrowth& g : root_growth_check(rec)) {
    screen.root_slopes.push_back(g.slope);
    screen.root_gaps_grow = screen.root_gaps_grow && g.positive;
  }
  constexpr int kSeeds = 16;
  const int d = mu.dim();
  Matrix lines(d, kSeeds);
  for (int i = 0; i < kSeeds; ++i) {
    WalkState s = WalkState::start(d, CounterRng(seed + 1, i));
    for (int step = 0; step < 500; ++step) s = advance(std::move(s), mu);
    lines.col(i) = s.factored.k.col(0);
  }
  Eigen::JacobiSVD<Matrix> svd(lines / std::sqrt(static_cast<double>(kSeeds)));
  screen.spread_singular_value = svd.singularValues()(d - 1);
  screen.flags_spread = screen.spread_singular_value > 1e-3;
  screen.passed = screen.root_gaps_grow && screen.flags_spread;
  return screen;
}

double scalar_observable(const ChamberVector& t) { return t.dim() == 2 ? t[0] - t[1] : t[0]; }

}  // namespace weylwalk
