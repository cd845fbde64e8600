// Acceptance run: one PASS/FAIL line per criterion, timed against its budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "weylwalk/deviation.hpp"
#include "weylwalk/parallel.hpp"
#include "weylwalk/quotient.hpp"
#include "weylwalk/renewal.hpp"
#include "weylwalk/rng.hpp"
#include "weylwalk/stats.hpp"

using namespace weylwalk;

namespace {

constexpr std::uint64_t kMasterSeed = 1;

std::uint64_t seed_for(int criterion) { return stream_key(kMasterSeed, static_cast<std::uint64_t>(criterion)); }

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

GroupElement random_sl(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Matrix m(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = n(rng);
    if (m.determinant() < 0) m.col(0) *= -1.0;
    if (std::abs(m.determinant()) > 1e-3) return GroupElement(m);
  }
}

GroupElement diag_exp(double a) {
  Vector s(2);
  s << a, -a;
  return GroupElement::diagonal_exp(s);
}

// 1 ----------------------------------------------------------------------------

void exact_math(Check& c) {
  std::mt19937_64 rng(seed_for(1));
  double recon = 0.0, inverse = 0.0, flat_norm = 0.0, equivariance = 0.0, closed_form = 0.0;
  bool weyl_ok = true, flats_ok = true;
  for (int d = 2; d <= 6; ++d) {
    for (int i = 0; i < 1000; ++i) {
      const GroupElement g = random_sl(d, rng);
      const CartanTriple t = cartan_decompose(g);
      recon = std::max(recon, (t.reconstruct() - g.matrix()).norm() / g.matrix().norm());
      const ChamberVector inv = cartan_projection(g.inverse());
      inverse = std::max(inverse, (inv.values() - t.t.opposite().values()).norm());
    }
    std::normal_distribution<double> n(0.0, 3.0);
    for (int i = 0; i < 100; ++i) {
      Vector s(d);
      for (int k = 0; k < d; ++k) s(k) = n(rng);
      s.array() -= s.mean();
      const double got = symspace_distance(GroupElement::identity(d), GroupElement::diagonal_exp(s));
      flat_norm = std::max(flat_norm, std::abs(got - s.norm()) / std::max(1.0, s.norm()));
    }
  }
  for (int d = 2; d <= 3; ++d) {
    for (int trial = 0; trial < 50; ++trial) {
      const GroupElement g = random_sl(d, rng);
      const GroupElement h = random_sl(d, rng);
      const auto p = is_transverse(OppositeFlag::standard(d).act(g.matrix()), FlagPoint::standard(d).act(g.matrix()));
      const auto hp = p ? is_transverse(p->minus.act(h.matrix()), p->plus.act(h.matrix())) : std::nullopt;
      if (!p || !hp) {
        flats_ok = false;
        continue;
      }
      const MaximalFlat f = flat_from_flags(*p);
      const MaximalFlat hf = flat_from_flags(*hp);
      flats_ok = flats_ok && same_flat(hf, MaximalFlat{h * f.base, *hp});
      std::normal_distribution<double> n(0.0, 1.0);
      Vector s(d);
      for (int i = 0; i < d; ++i) s(i) = n(rng);
      s.array() -= s.mean();
      equivariance = std::max(equivariance, distance_to_flat(h * f.base * GroupElement::diagonal_exp(s), hf).distance);
      const auto orbit = weyl_orbit(*p);
      weyl_ok = weyl_ok && orbit.size() == static_cast<std::size_t>(d == 2 ? 2 : 6);
      for (const auto& q : orbit) flats_ok = flats_ok && same_flat(f, flat_from_flags(q, 1e-12));
    }
  }
  const auto axis = flat_from_flags(*is_transverse(OppositeFlag::standard(2), FlagPoint::standard(2)));
  for (double x : {-5.0, -1.2, -0.3, 0.0, 0.4, 2.0, 9.0})
    for (double y : {0.05, 0.5, 1.0, 3.0, 20.0}) {
      Matrix m(2, 2);
      m << std::sqrt(y), x / std::sqrt(y), 0.0, 1.0 / std::sqrt(y);
      const double expected = from_hyperbolic(std::asinh(std::abs(x) / y));
      closed_form = std::max(closed_form, std::abs(distance_to_flat(GroupElement(m), axis).distance - expected));
    }
  c.detail << "reconstruction " << recon << ", kappa inverse " << inverse << ", |d(e,a_s)-|s|| " << flat_norm
           << ", equivariance " << equivariance << ", closed form " << closed_form;
  c.require(recon <= 1e-9, "reconstruction <= 1e-9");
  c.require(inverse <= 1e-8, "kappa(g^-1) opposite <= 1e-8");
  c.require(flat_norm <= 1e-12, "d(e, a_s) = |s|");
  c.require(flats_ok && equivariance <= 1e-7, "flat equivariance");
  c.require(weyl_ok, "Weyl fiber of size d!");
  c.require(closed_form <= 1e-6, "SL2 distance to flat within 1e-6");
}

// 2 ----------------------------------------------------------------------------

void shift_identity(Check& c) {
  std::vector<int> steps(200);
  for (int i = 0; i < 200; ++i) steps[i] = i + 1;
  const auto minus = spread_opposite_flags(2, 10);
  const auto reports = parallel_map<BirkhoffReport>(10, [&](std::size_t j) {
    return birkhoff_flat_distance(reference_measure(), minus[j], 200, stream_key(seed_for(2), j), steps, 1.0);
  });
  double worst = 0.0;
  std::size_t evaluated = 0, conditioning = 0, transversality = 0;
  for (const auto& r : reports) {
    worst = std::max(worst, r.max_residual);
    evaluated += r.steps.size();
    conditioning += r.skipped_conditioning;
    transversality += r.skipped_transversality;
  }
  c.detail << "max residual " << worst << " over " << evaluated << " of 2000 steps (" << conditioning
           << " past the root-gap limit, " << transversality << " not transverse)";
  c.require(worst <= 1e-5, "residual <= 1e-5");
  c.require(evaluated >= 100, "at least 100 evaluated steps");
}

// 3 ----------------------------------------------------------------------------

void chamber_signature(Check& c) {
  const MeasureSpec mu = reference_measure();
  const int n = 5000, seeds = 100, burn = 1000;
  const std::vector<double> grid{0.25, 0.5, 1.0, 1.5, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0, 12.0, 15.0, 20.0};
  const auto series = parallel_map<DeviationSeries>(
      seeds, [&](std::size_t j) { return deviation_series(mu, n, stream_key(seed_for(3), j), burn); });
  const DensityCurve curve = density_curve_from(series, grid);

  int best = 0;
  double best_r = -1.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    int above = 0;
    for (const auto& s : curve.per_seed) above += s[k] > 0.9;
    if (above > best) {
      best = above;
      best_r = grid[k];
    }
  }
  bool monotone = true;
  for (std::size_t k = 1; k < grid.size(); ++k)
    monotone = monotone && curve.density_median[k] >= curve.density_median[k - 1];

  int clean = 0;
  for (const auto& s : series) {
    bool growing = false;
    for (const auto& e : angular_rate_check(s))
      if (e.in_claim) growing = growing || e.growing;
    clean += !growing;
  }
  c.detail << best << " seeds above 0.9 at R = " << best_r << " (" << curve.excluded_unstable
           << " unstable excluded), median monotone " << (monotone ? "yes" : "no") << ", " << clean
           << " seeds without angular growth";
  c.require(best >= 90, ">= 90 seeds with density > 0.9 at some R <= 20");
  c.require(monotone, "density curve monotone");
  c.require(clean >= 95, ">= 95 seeds without angular growth");
}

// 4 ----------------------------------------------------------------------------

bool lattice_exact() {
  for (double c : {0.35, 0.7, 1.3}) {
    const std::vector<double> shifts{0.05, 1.33, 10.2, 25.61, 41.0};
    const auto vc = visit_counts(dirac(diag_exp(c / 2)), {0.0, 2.0}, shifts, 0, 3, seed_for(4));
    for (std::size_t s = 0; s < shifts.size(); ++s) {
      int expected = 0;
      for (int m = 0; m <= vc.horizon; ++m) expected += m * c >= shifts[s] && m * c <= shifts[s] + 2.0;
      for (int v : vc.counts[s])
        if (v != expected) return false;
    }
  }
  return true;
}

// Shape of P(count >= k) for k >= 1 over its empirical support.
struct TailShape {
  bool decreasing = true;
  double worst_ratio = 0.0;  // max of P(>= k+1) / P(>= k)
  double r2 = 0.0;           // of the least-squares line through log P
  std::size_t support = 0;
};

TailShape tail_shape(const std::vector<double>& tail) {
  std::vector<double> k, logp;
  for (std::size_t i = 1; i < tail.size() && tail[i] > 0.0; ++i) {
    k.push_back(static_cast<double>(i));
    logp.push_back(std::log(tail[i]));
  }
  TailShape t;
  t.support = k.size();
  for (std::size_t i = 1; i < logp.size(); ++i) {
    t.decreasing = t.decreasing && logp[i] < logp[i - 1];
    t.worst_ratio = std::max(t.worst_ratio, std::exp(logp[i] - logp[i - 1]));
  }
  if (k.size() < 3) return t;
  const LinearFit fit = linear_fit(k, logp);
  const double mean = sample_mean(logp);
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < k.size(); ++i) {
    ss_res += std::pow(logp[i] - fit.intercept - fit.slope * k[i], 2);
    ss_tot += std::pow(logp[i] - mean, 2);
  }
  t.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;
  return t;
}

void renewal_suite(Check& c) {
  const MeasureSpec mu = reference_measure();
  std::vector<double> shifts;
  for (double s = 0.0; s <= 60.0 + 1e-9; s += 2.5) shifts.push_back(s);
  const Interval interval{0.0, 2.0};

  const bool lattice = lattice_exact();

  Vector e1 = Vector::Zero(2);
  e1(0) = 1.0;
  const auto kesten = log_norm_renewal(mu, e1, interval, shifts, 0, 10000, stream_key(seed_for(4), 1));
  double worst = 0.0;
  for (std::size_t s = 0; s < shifts.size(); ++s)
    if (shifts[s] >= 40.0) worst = std::max(worst, std::abs(kesten.mean[s] / kesten.renewal_limit() - 1.0));

  const auto cartan = visit_counts(mu, interval, shifts, 0, 4000, stream_key(seed_for(4), 2));
  double sup = 0.0, lo = 1e300, hi = 0.0;
  for (std::size_t s = 0; s < shifts.size(); ++s) {
    sup = std::max(sup, cartan.mean[s]);
    if (shifts[s] >= 20.0) {
      lo = std::min(lo, cartan.mean[s]);
      hi = std::max(hi, cartan.mean[s]);
    }
  }
  bool tails_ok = true;
  double worst_ratio = 0.0, worst_r2 = 1.0;
  std::size_t support = 0;
  for (double shift : {10.0, 30.0, 50.0}) {
    const auto idx = static_cast<std::size_t>(std::find(shifts.begin(), shifts.end(), shift) - shifts.begin());
    const TailShape t = tail_shape(cartan.tail_distribution(idx));
    worst_ratio = std::max(worst_ratio, t.worst_ratio);
    worst_r2 = std::min(worst_r2, t.r2);
    support = std::max(support, t.support);
    tails_ok = tails_ok && t.support >= 2 && t.decreasing && t.worst_ratio < 1.0;
  }
  c.detail << "lattice exact " << (lattice ? "yes" : "no") << ", Kesten worst deviation " << worst
           << " (limit " << kesten.renewal_limit() << "), Cartan sup " << sup << " ratio " << hi / lo
           << ", tail support k <= " << support << " with ratio <= " << worst_ratio << " (log fit r2 " << worst_r2
           << ")";
  c.require(lattice, "lattice counts exact");
  c.require(worst <= 0.2 && !kesten.lower_bound, "Kesten means within 20% at shifts >= 40");
  c.require(std::isfinite(sup) && !cartan.lower_bound, "Cartan sup finite");
  c.require(lo > 0.0 && hi / lo < 2.0, "Cartan means vary by < 2x at shifts >= 20");
  c.require(tails_ok, "tails decreasing with geometric ratio < 1");
}

// 5 ----------------------------------------------------------------------------

void stationary_mass(Check& c) {
  int discarded = 0;
  const auto samples = stationary_samples(reference_measure(), 10000, seed_for(5), 500, &discarded);
  const std::vector<double> grid{0.0, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  double worst_r = 0.0;
  bool ok = true;
  for (const OppositeFlag& minus : spread_opposite_flags(2, 8)) {
    const StationaryMass m = stationary_flat_mass(samples, minus, grid);
    ok = ok && m.fraction.front() == 0.0 && m.smallest_r_two_thirds > 0.0;
    worst_r = std::max(worst_r, m.smallest_r_two_thirds);
  }
  c.detail << samples.size() << " samples (" << discarded << " discarded), largest R' with mass > 2/3 is "
           << worst_r;
  c.require(ok, "finite R' with mass > 2/3 and zero mass at R' = 0 for all 8 directions");
}

// 6 and 7 ------------------------------------------------------------------------

struct GroupCase {
  FuchsianGroup group;
  Verdict expected;
  double r_max;
};

std::vector<GroupCase> group_cases() {
  return {{FuchsianGroup::trivial(), Verdict::both_transient_signature, 10.0},
          {FuchsianGroup::cyclic(diag_exp(1.0)), Verdict::both_transient_signature, 40.0},
          {FuchsianGroup::schottky(4.0), Verdict::both_transient_signature, 20.0},
          {FuchsianGroup::modular(), Verdict::both_recurrent_signature, 10.0}};
}

MeasureSpec skewed_reference() {
  const MeasureSpec mu = reference_measure();
  const auto& atoms = mu.atoms();
  return MeasureSpec({{atoms[0].element, 0.25}, {atoms[1].element, 0.75}});
}

std::vector<Signature> geodesic_signatures;

void dichotomy_matrix(Check& c) {
  const BallTarget target{Point(0.0, 2.0), 0.15};
  int inconsistent = 0;
  bool ok = true;
  geodesic_signatures.clear();
  const MeasureSpec measures[] = {reference_measure(), skewed_reference()};
  for (int m = 0; m < 2; ++m) {
    for (const GroupCase& g : group_cases()) {
      DichotomyParams p;
      p.seed = stream_key(seed_for(6), m);
      const DichotomyReport r = dichotomy_experiment(g.group, measures[m], target, p);
      inconsistent += r.verdict == Verdict::inconsistent;
      ok = ok && r.verdict == g.expected;
      if (m == 0) geodesic_signatures.push_back(r.geodesic_signature);
      c.detail << (m == 0 ? "" : "skewed ") << g.group.name() << " " << to_string(r.verdict) << "; ";
    }
  }
  c.require(ok, "expected verdict for every group and measure");
  c.require(inconsistent == 0, "no inconsistent verdicts");
}

void critical_exponents(Check& c) {
  const auto cases = group_cases();
  bool coherent = geodesic_signatures.size() == cases.size();
  CriticalExponent ce[4];
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const Point z = cases[i].group.basepoint();
    const OrbitEnumeration orbit = enumerate_orbit(cases[i].group, z, z, cases[i].r_max);
    ce[i] = critical_exponent(orbit);
    const PoincareResult at_one = poincare_series(orbit, 1.0);
    if (coherent) coherent = at_one.diverging == (geodesic_signatures[i] == Signature::recurrent);
    c.detail << cases[i].group.name() << " delta " << ce[i].delta << " +- " << ce[i].stderr_ << " ("
             << orbit.elements.size() << " points, diverging at 1 " << (at_one.diverging ? "yes" : "no") << "); ";
  }
  c.require(ce[1].delta < 0.1, "cyclic delta < 0.1");
  c.require(ce[2].delta > 0.0 && ce[2].delta < 1.0 && !ce[2].wide, "Schottky 0 < delta < 1");
  c.require(ce[3].delta >= 0.85 && ce[3].delta <= 1.15, "modular delta in [0.85, 1.15]");
  c.require(coherent, "divergence at s = 1 matches the geodesic signature");
}

// 8 ----------------------------------------------------------------------------

void volume(Check& c) {
  const std::vector<double> t{0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0};
  const auto ratio = volume_density_ratio(t);
  double analytic = 0.0;
  bool approaching = true;
  for (std::size_t i = 0; i < t.size(); ++i) {
    analytic = std::max(analytic, std::abs(ratio[i] - 0.5 * (1.0 - std::exp(-2.0 * t[i]))));
    if (i > 0) approaching = approaching && std::abs(ratio[i] - 0.5) <= std::abs(ratio[i - 1] - 0.5);
  }
  const VolumeCheck mc = volume_monte_carlo(6.0, 2000000, seed_for(8));
  c.detail << "ratio at t = 32 is " << ratio.back() << ", Monte Carlo " << mc.monte_carlo << " vs " << mc.exact
           << " (relative error " << mc.relative_error << ")";
  c.require(approaching && analytic < 1e-12 && std::abs(ratio.back() - 0.5) < 1e-12, "ratio tends to 1/2");
  c.require(mc.relative_error < 0.03, "Monte Carlo within 3%");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "exact-math suite", 10.0, exact_math},
      {2, "flat-distance shift identity", 60.0, shift_identity},
      {3, "chamber deviation signature", 300.0, chamber_signature},
      {4, "renewal suite", 300.0, renewal_suite},
      {5, "stationary flat mass", 120.0, stationary_mass},
      {6, "dichotomy matrix", 600.0, dichotomy_matrix},
      {7, "critical exponents", 180.0, critical_exponents},
      {8, "volume density", 10.0, volume},
  };
  int failed = 0;
  for (const Criterion& cr : criteria) {
    Check c;
    c.detail.precision(4);
    const auto start = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << " [exception: " << e.what() << "]";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > cr.budget_s) c.require(false, "time budget");
    failed += !c.ok;
    std::printf("%s criterion %d %s (%.1f s of %.0f s): %s\n", c.ok ? "PASS" : "FAIL", cr.id, cr.name, secs,
                cr.budget_s, c.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
