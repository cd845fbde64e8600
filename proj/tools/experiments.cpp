#include <algorithm>
#include <cmath>
#include <random>

#include "cli.hpp"
#include "weylwalk/deviation.hpp"
#include "weylwalk/parallel.hpp"
#include "weylwalk/renewal.hpp"
#include "weylwalk/stats.hpp"

namespace weylwalk::cli {

namespace {

std::vector<double> grid(double from, double to, double step) {
  std::vector<double> g;
  for (long i = 0; from + step * static_cast<double>(i) <= to + 1e-9; ++i) g.push_back(from + step * static_cast<double>(i));
  return g;
}

std::string file(Context& ctx, Outcome& o, const std::string& name) {
  o.files.push_back(name);
  return (ctx.out / name).string();
}

void screen_measure(Context& ctx, Outcome& o) {
  const ZariskiScreen z = zariski_screen(ctx.measure(), ctx.seed);
  o.metrics["zariski_screen"] = z.passed;
  if (!z.passed) o.warnings.push_back("measure fails the Zariski-density screen");
}

Json green_json(const GreenEstimate& g) {
  return {{"estimate", g.estimate},
          {"estimate_half", g.estimate_half},
          {"stderr", g.stderr_},
          {"global_rate", g.global_rate},
          {"last_decile_rate", g.last_decile_rate},
          {"tail_flag", g.tail_flag},
          {"flagged_reductions", g.flagged_reductions}};
}

void green_rows(CsvWriter& csv, const std::string& kind, const GreenEstimate& g) {
  csv << kind << g.estimate << g.estimate_half << g.stderr_ << g.global_rate << g.last_decile_rate
      << static_cast<int>(g.tail_flag) << g.flagged_reductions;
  csv.end_row();
}

const std::vector<std::string> kGreenHeader{"kind",        "estimate",         "estimate_half", "stderr",
                                            "global_rate", "last_decile_rate", "tail_flag",     "flagged_reductions"};

// cartan-selftest ---------------------------------------------------------------

Outcome cartan_selftest(Context& ctx, Params& p) {
  const auto dims = p.integers("dims", {2, 3, 4, 5, 6}, 2);
  const int samples = p.integer("samples", 1000);
  const double scale = p.number("scale", 1.0, 0.0, true);
  for (int d : dims)
    if (d > 6) p.fail("dims", "dimensions above 6 are not supported");
  if (ctx.dry_run) return {};

  Outcome o;
  CsvWriter csv(file(ctx, o, "selftest.csv"),
                {"d", "samples", "max_reconstruction_error", "max_inverse_error", "max_distance_error"});
  double worst_rec = 0.0, worst_inv = 0.0, worst_dist = 0.0;
  for (std::size_t di = 0; di < dims.size(); ++di) {
    const int d = dims[di];
    struct Errors {
      double rec = 0.0, inv = 0.0, dist = 0.0;
    };
    const auto errs = parallel_map<Errors>(samples, [&](std::size_t i) {
      std::mt19937_64 gen(stream_key(ctx.seed, di * 1000003 + i));
      std::normal_distribution<double> normal(0.0, scale);
      Matrix m(d, d);
      for (;;) {
        for (int r = 0; r < d; ++r)
          for (int c = 0; c < d; ++c) m(r, c) = normal(gen);
        if (m.determinant() < 0.0) m.col(0) *= -1.0;
        if (std::abs(m.determinant()) > 1e-3) break;
      }
      const GroupElement g(m);
      const CartanTriple ct = cartan_decompose(g);
      Errors e;
      e.rec = (ct.reconstruct() - g.matrix()).norm() / g.matrix().norm();
      const ChamberVector back = cartan_projection(g.inverse()).opposite();
      e.inv = (back.values() - ct.t.values()).cwiseAbs().maxCoeff();
      Vector s(d);
      for (int r = 0; r < d; ++r) s(r) = normal(gen);
      s.array() -= s.mean();
      e.dist = std::abs(symspace_norm(GroupElement::diagonal_exp(s)) - s.norm());
      return e;
    });
    double rec = 0.0, inv = 0.0, dist = 0.0;
    for (const auto& e : errs) {
      rec = std::max(rec, e.rec);
      inv = std::max(inv, e.inv);
      dist = std::max(dist, e.dist);
    }
    csv << d << samples << rec << inv << dist;
    csv.end_row();
    worst_rec = std::max(worst_rec, rec);
    worst_inv = std::max(worst_inv, inv);
    worst_dist = std::max(worst_dist, dist);
  }
  o.metrics["max_reconstruction_error"] = worst_rec;
  o.metrics["max_inverse_error"] = worst_inv;
  o.metrics["max_distance_error"] = worst_dist;
  return o;
}

// deviation -----------------------------------------------------------------------

Outcome deviation(Context& ctx, Params& p) {
  const MeasureSpec& mu = ctx.measure();
  const int n = p.integer("n", 5000);
  const int n_traj = p.integer("n_traj", 100);
  const int burn = p.integer("burn", default_burn(n));
  const double window = p.number("window", 0.2, 0.0, true);
  const auto r_grid = p.numbers("r_grid", grid(0.5, 20.0, 0.5), 0.0);
  const double threshold = p.number("density_threshold", 0.9, 0.0);
  const double seed_fraction = p.number("seed_fraction", 0.9, 0.0);
  if (window > 1.0) p.fail("window", "must be <= 1");
  if (ctx.dry_run) return {};

  Outcome o;
  screen_measure(ctx, o);
  const DensityCurve dc = density_curve(mu, r_grid, n, n_traj, ctx.seed, window, burn);
  const std::size_t used = dc.per_seed.size();
  std::vector<double> fraction(r_grid.size(), 0.0);
  for (const auto& row : dc.per_seed)
    for (std::size_t j = 0; j < r_grid.size(); ++j) fraction[j] += row[j] > threshold ? 1.0 : 0.0;
  for (double& f : fraction) f = used > 0 ? f / static_cast<double>(used) : 0.0;

  CsvWriter csv(file(ctx, o, "density.csv"), {"R", "density_p10", "density_median", "fraction_above_threshold"});
  int r_star = -1;
  bool monotone = true;
  for (std::size_t j = 0; j < r_grid.size(); ++j) {
    csv << r_grid[j] << dc.density_p10[j] << dc.density_median[j] << fraction[j];
    csv.end_row();
    if (r_star < 0 && fraction[j] >= seed_fraction) r_star = static_cast<int>(j);
    if (j > 0 && dc.density_median[j] < dc.density_median[j - 1]) monotone = false;
  }

  // One series in full, from the first seed of the run.
  const DeviationSeries s = deviation_series(mu, n, stream_key(ctx.seed, 0), burn);
  std::vector<std::string> header{"step", "dev"};
  for (int i = 1; i <= mu.dim(); ++i) header.push_back("t_" + std::to_string(i));
  CsvWriter series(file(ctx, o, "deviation.csv"), header);
  for (std::size_t i = 0; i < s.dev.size(); ++i) {
    series << static_cast<std::int64_t>(i + 1) << s.dev[i];
    for (int c = 0; c < mu.dim(); ++c) series << s.t[i][c];
    series.end_row();
  }

  o.metrics["seeds_used"] = static_cast<int>(used);
  o.metrics["excluded_unstable"] = dc.excluded_unstable;
  o.metrics["best_seed_fraction"] = *std::max_element(fraction.begin(), fraction.end());
  o.metrics["r_star"] = r_star >= 0 ? r_grid[r_star] : -1.0;
  o.metrics["density_median_at_r_star"] = r_star >= 0 ? dc.density_median[r_star] : 0.0;
  o.metrics["density_median_max"] = *std::max_element(dc.density_median.begin(), dc.density_median.end());
  o.metrics["median_monotone"] = monotone;
  if (dc.excluded_unstable > 0)
    o.warnings.push_back(std::to_string(dc.excluded_unstable) + " seeds excluded for an unstable limit flag");
  return o;
}

// angular ------------------------------------------------------------------------

Outcome angular(Context& ctx, Params& p) {
  const MeasureSpec& mu = ctx.measure();
  const int n = p.integer("n", 5000);
  const int n_traj = p.integer("n_traj", 100);
  const int burn = p.integer("burn", default_burn(n));
  const double eps = p.number("eps", 0.1, 0.0, true);
  const int batches = p.integer("batches", 10, 3);
  if (eps >= 1.0) p.fail("eps", "must be < 1");
  if (ctx.dry_run) return {};

  Outcome o;
  struct Seed {
    std::vector<AngularEntry> entries;
    bool unstable = false;
  };
  const auto runs = parallel_map<Seed>(n_traj, [&](std::size_t j) {
    const DeviationSeries s = deviation_series(mu, n, stream_key(ctx.seed, j), burn);
    return Seed{angular_rate_check(s, eps, batches), s.unstable};
  });
  CsvWriter csv(file(ctx, o, "angular.csv"), {"seed", "i", "j", "envelope", "log_slope", "p_value", "growing"});
  int clean = 0, unstable = 0;
  double max_env = 0.0;
  for (std::size_t j = 0; j < runs.size(); ++j) {
    bool growing = false;
    for (const auto& e : runs[j].entries) {
      csv << static_cast<std::int64_t>(j) << e.i << e.j << e.envelope << e.log_slope << e.p_value
          << static_cast<int>(e.growing);
      csv.end_row();
      if (e.in_claim) {
        growing = growing || e.growing;
        max_env = std::max(max_env, e.envelope);
      }
    }
    clean += !growing;
    unstable += runs[j].unstable;
  }
  o.metrics["seeds_without_growth"] = clean;
  o.metrics["fraction_without_growth"] = static_cast<double>(clean) / n_traj;
  o.metrics["max_envelope"] = max_env;
  o.metrics["unstable_seeds"] = unstable;
  if (unstable > 0) o.warnings.push_back(std::to_string(unstable) + " seeds with an unstable limit flag");
  return o;
}

// renewal ------------------------------------------------------------------------

Outcome renewal(Context& ctx, Params& p) {
  const MeasureSpec& mu = ctx.measure();
  const std::string observable = p.choice("observable", "cartan", {"cartan", "log_norm"});
  const auto iv = p.numbers("interval", {0.0, 2.0});
  const auto shifts = p.numbers("shifts", grid(0.0, 60.0, 2.5));
  const int horizon = p.integer("horizon", 0, 0);
  const int n_traj = p.integer("n_traj", 2000, 2);
  const double large = p.number("large_shift", 40.0);
  const double plateau_from = p.number("plateau_shift", 20.0);
  auto vec = p.numbers("vector", {});
  const double band = p.number("band", ctx.conjecture_band ? 0.3 : 0.2, 0.0, true);
  if (iv.size() != 2 || !(iv[1] >= iv[0])) p.fail("interval", "expected [lo, hi] with hi >= lo");
  if (!vec.empty() && static_cast<int>(vec.size()) != mu.dim()) p.fail("vector", "length must equal the dimension");
  if (ctx.dry_run) return {};

  Outcome o;
  const Interval interval{iv[0], iv[1]};
  VisitCounter vc;
  if (observable == "cartan") {
    vc = visit_counts(mu, interval, shifts, horizon, n_traj, ctx.seed);
  } else {
    Vector v = Vector::Zero(mu.dim());
    v(0) = 1.0;
    if (!vec.empty()) v = Eigen::Map<const Vector>(vec.data(), mu.dim());
    vc = log_norm_renewal(mu, v, interval, shifts, horizon, n_traj, ctx.seed);
  }
  const double limit = vc.renewal_limit();
  CsvWriter csv(file(ctx, o, "renewal.csv"), {"shift", "mean_count", "stderr", "n_effective"});
  CsvWriter tails(file(ctx, o, "tails.csv"), {"shift", "k", "p_count_ge_k"});
  double sup = 0.0, worst_rel = 0.0, lo = 1e300, hi = 0.0;
  for (std::size_t s = 0; s < shifts.size(); ++s) {
    csv << shifts[s] << vc.mean[s] << vc.stderr_[s] << static_cast<std::int64_t>(n_traj);
    csv.end_row();
    const auto tail = vc.tail_distribution(s);
    for (std::size_t k = 0; k < tail.size(); ++k) {
      tails << shifts[s] << static_cast<std::int64_t>(k) << tail[k];
      tails.end_row();
    }
    sup = std::max(sup, vc.mean[s]);
    if (shifts[s] >= large && limit > 0.0) worst_rel = std::max(worst_rel, std::abs(vc.mean[s] / limit - 1.0));
    if (shifts[s] >= plateau_from) {
      lo = std::min(lo, vc.mean[s]);
      hi = std::max(hi, vc.mean[s]);
    }
  }
  o.metrics["lambda_hat"] = vc.lambda_hat;
  o.metrics["renewal_limit"] = limit;
  o.metrics["horizon"] = vc.horizon;
  o.metrics["sup_mean_count"] = sup;
  o.metrics["max_relative_deviation_large_shifts"] = worst_rel;
  o.metrics["within_band"] = worst_rel <= band;
  o.metrics["plateau_ratio"] = lo > 0.0 && lo < 1e300 ? hi / lo : -1.0;
  o.metrics["reentry_probability"] = vc.reentry_probability;
  if (shifts.size() >= 6) o.metrics["tail_slope"] = vc.tail_slope();
  if (vc.lower_bound)
    o.warnings.push_back("horizon flag: re-entry probability " + format_double(vc.reentry_probability) +
                         ", counts are lower bounds");
  return o;
}

// hitting ------------------------------------------------------------------------

Outcome hitting(Context& ctx, Params& p) {
  const MeasureSpec& mu = ctx.measure();
  const auto lengths = p.numbers("lengths", {0.5, 1.0, 2.0, 4.0, 8.0}, 0.0);
  const auto shifts = p.numbers("shifts", grid(10.0, 60.0, 5.0));
  const int n_starts = p.integer("starts", 8);
  const double spread = p.number("start_spread", 4.0, 0.0);
  const int horizon = p.integer("horizon", 400);
  const int n_traj = p.integer("n_traj", 400);
  const double target = p.number("target", 0.95, 0.0);
  if (ctx.dry_run) return {};

  Outcome o;
  const auto starts = random_starts(mu.dim(), n_starts, spread, stream_key(ctx.seed, 0x5747));
  CsvWriter csv(file(ctx, o, "hitting.csv"), {"length", "start", "shift", "probability"});
  double l_star = -1.0, at_star = 0.0;
  for (double len : lengths) {
    double worst = 1.0;
    for (std::size_t g = 0; g < starts.size(); ++g) {
      const auto curve = hitting_probability(mu, {0.0, len}, shifts, starts[g], horizon, n_traj, stream_key(ctx.seed, g));
      for (std::size_t s = 0; s < shifts.size(); ++s) {
        csv << len << static_cast<std::int64_t>(g) << shifts[s] << curve.probability[s];
        csv.end_row();
        worst = std::min(worst, curve.probability[s]);
      }
    }
    if (l_star < 0.0 && worst >= target) {
      l_star = len;
      at_star = worst;
    }
  }
  o.metrics["l_star"] = l_star;
  o.metrics["min_probability_at_l_star"] = at_star;
  return o;
}

// escape -------------------------------------------------------------------------

Outcome escape(Context& ctx, Params& p) {
  const MeasureSpec& mu = ctx.measure();
  const double r = p.number("r", 5.0, 0.0, true);
  const auto n0_grid = p.integers("n0_grid", {5, 10, 20, 40, 80, 160});
  const int n_starts = p.integer("starts", 8);
  const double spread = p.number("start_spread", 10.0, 0.0);
  const int horizon = p.integer("horizon", 400);
  const int n_traj = p.integer("n_traj", 1000);
  const double eps = p.number("eps", 0.05, 0.0);
  if (ctx.dry_run) return {};

  Outcome o;
  const auto starts = random_starts(mu.dim(), n_starts, spread, stream_key(ctx.seed, 0x5747));
  const EscapeTable tab = escape_probability(mu, r, n0_grid, starts, horizon, n_traj, ctx.seed);
  CsvWriter csv(file(ctx, o, "escape.csv"), {"start", "n0", "probability"});
  for (std::size_t g = 0; g < tab.probability.size(); ++g)
    for (std::size_t k = 0; k < n0_grid.size(); ++k) {
      csv << static_cast<std::int64_t>(g) << n0_grid[k] << tab.probability[g][k];
      csv.end_row();
    }
  o.metrics["n0"] = tab.uniform_n0(eps);
  return o;
}

// quotient-green -----------------------------------------------------------------

struct TargetParams {
  BallTarget ball;
  double dt = 0.0;
};

TargetParams target_params(Params& p) {
  TargetParams t;
  t.ball.center = p.point("target_center", Point(0.0, 2.0));
  t.ball.radius = p.number("target_radius", 0.15, 0.0, true);
  t.dt = p.number("dt", 0.0, 0.0);
  if (t.dt > t.ball.hyperbolic_radius() / 4) p.fail("dt", "must be <= hyperbolic target radius / 4");
  if (t.dt == 0.0) t.dt = t.ball.hyperbolic_radius() / 4;
  return t;
}

Outcome quotient_green(Context& ctx, Params& p) {
  const FuchsianGroup& group = ctx.group();
  const MeasureSpec& mu = ctx.measure();
  const TargetParams t = target_params(p);
  const int n_max = p.integer("n_max", 400, 10);
  const int n_traj = p.integer("n_traj", 200);
  const double t_max = p.number("t_max", 400.0, 0.0, true);
  const int n_starts = p.integer("starts", 8);
  const double spread = p.number("start_spread", 0.1, 0.0);
  const auto k_centers = p.points("k_centers");
  const double k_t_max = p.number("k_t_max", 12.0, 0.0, true);
  const int n_k = p.integer("n_k", 16, 2);
  if (mu.dim() != 2) throw ConfigError("/measure", "quotient experiments need a measure on SL_2");
  if (ctx.dry_run) return {};

  Outcome o;
  const auto starts = spread_starts(t.ball.center, spread, n_starts, ctx.seed);
  const GreenEstimate w = walk_green(group, mu, starts, t.ball, n_max, n_traj, ctx.seed);
  const GreenEstimate g = geodesic_green(group, starts, t.ball, t_max, t.dt);
  CsvWriter csv(file(ctx, o, "green.csv"), kGreenHeader);
  green_rows(csv, "walk", w);
  green_rows(csv, "geodesic", g);
  o.metrics["walk_estimate"] = w.estimate;
  o.metrics["walk_tail_flag"] = w.tail_flag;
  o.metrics["walk_last_decile_rate"] = w.last_decile_rate;
  o.metrics["geodesic_estimate"] = g.estimate;
  o.metrics["geodesic_tail_flag"] = g.tail_flag;
  o.metrics["geodesic_last_decile_rate"] = g.last_decile_rate;
  o.metrics["injectivity_radius"] = injectivity_radius(group, t.ball.center);
  if (w.flagged_reductions + g.flagged_reductions > 0)
    o.warnings.push_back("greedy cap reached in " + std::to_string(w.flagged_reductions + g.flagged_reductions) +
                         " reductions");

  if (!k_centers.empty()) {
    CsvWriter kcsv(file(ctx, o, "k_average.csv"),
                   {"center_x", "center_y", "distance", "lhs", "rhs", "ratio", "arcs", "injectivity_ok"});
    double lo = 1e300, hi = 0.0;
    bool inj = true;
    for (const Point& c : k_centers) {
      const BallTarget ball{c, t.ball.radius};
      const KAveragedGreen k = k_averaged_green(group, GroupElement::identity(2), ball, k_t_max, n_k);
      kcsv << c.real() << c.imag() << hyperbolic_distance(Point(0.0, 1.0), c) << k.lhs << k.rhs << k.ratio << k.arcs
           << static_cast<int>(k.injectivity_ok);
      kcsv.end_row();
      lo = std::min(lo, k.ratio);
      hi = std::max(hi, k.ratio);
      inj = inj && k.injectivity_ok;
    }
    o.metrics["k_ratio_spread"] = lo > 0.0 ? hi / lo : -1.0;
    o.metrics["k_injectivity_ok"] = inj;
    if (!inj) o.warnings.push_back("target radius above the injectivity radius; k-averages are lower bounds");
  }
  return o;
}

// poincare -----------------------------------------------------------------------

Outcome poincare(Context& ctx, Params& p) {
  const FuchsianGroup& group = ctx.group();
  const Point z1 = p.point("z1", group.basepoint());
  const Point z2 = p.point("z2", group.basepoint());
  const auto s_values = p.numbers("s", {0.5, 1.0, 1.5}, 0.0);
  const double r_max = p.number("r_max", 10.0, 0.0, true);
  const double slack = p.number("slack", 3.0, 0.0);
  if (ctx.dry_run) return {};

  Outcome o;
  const OrbitEnumeration orbit = enumerate_orbit(group, z1, z2, r_max, slack);
  CsvWriter csv(file(ctx, o, "poincare.csv"), {"s", "partial_sum", "growth_diagnostic", "diverging", "terms"});
  CsvWriter shells(file(ctx, o, "shells.csv"), {"s", "shell", "contribution"});
  auto emit = [&](double s) {
    const PoincareResult r = poincare_series(orbit, s);
    csv << s << r.partial_sum << r.growth_diagnostic << static_cast<int>(r.diverging)
        << static_cast<std::int64_t>(r.terms);
    csv.end_row();
    for (std::size_t k = 0; k < r.shell_contribution.size(); ++k) {
      shells << s << static_cast<std::int64_t>(k) << r.shell_contribution[k];
      shells.end_row();
    }
    return r;
  };
  for (double s : s_values) emit(s);
  const PoincareResult at_one = poincare_series(orbit, 1.0);
  const CriticalExponent ce = critical_exponent(orbit);
  CsvWriter counts(file(ctx, o, "orbit_counts.csv"), {"R", "count"});
  for (double r = 0.25; r <= r_max + 1e-9; r += 0.25) {
    const auto n = std::count_if(orbit.elements.begin(), orbit.elements.end(),
                                 [r](const OrbitElement& e) { return e.distance <= r; });
    counts << r << static_cast<std::int64_t>(n);
    counts.end_row();
  }
  o.metrics["delta_hat"] = ce.delta;
  o.metrics["delta_stderr"] = ce.stderr_;
  o.metrics["delta_wide"] = ce.wide;
  o.metrics["orbit_points"] = static_cast<std::int64_t>(orbit.elements.size());
  o.metrics["growth_diagnostic_at_1"] = at_one.growth_diagnostic;
  o.metrics["diverging_at_1"] = at_one.diverging;
  o.metrics["partial_sum_at_1"] = at_one.partial_sum;
  o.metrics["collision_rate"] = orbit.collision_rate;
  o.metrics["discreteness_screen"] = group.discreteness_screen();
  if (orbit.flagged) o.warnings.push_back("orbit enumeration flagged: collision rate " + format_double(orbit.collision_rate));
  if (ce.wide) o.warnings.push_back("fewer than 100 orbit points; critical exponent is wide");
  return o;
}

// dichotomy ----------------------------------------------------------------------

Outcome dichotomy(Context& ctx, Params& p) {
  const FuchsianGroup& group = ctx.group();
  const MeasureSpec& mu = ctx.measure();
  const TargetParams t = target_params(p);
  DichotomyParams d;
  d.n_max = p.integer("n_max", d.n_max, 10);
  d.n_traj = p.integer("n_traj", d.n_traj);
  d.t_max = p.number("t_max", d.t_max, 0.0, true);
  d.starts = p.integer("starts", d.starts);
  d.start_spread = p.number("start_spread", d.start_spread, 0.0);
  d.dt = t.dt;
  if (mu.dim() != 2) throw ConfigError("/measure", "quotient experiments need a measure on SL_2");
  if (ctx.dry_run) return {};

  Outcome o;
  screen_measure(ctx, o);
  d.seed = ctx.seed;
  const DichotomyReport rep = dichotomy_experiment(group, mu, t.ball, d);
  CsvWriter csv(file(ctx, o, "dichotomy.csv"), kGreenHeader);
  green_rows(csv, "walk", rep.walk);
  green_rows(csv, "geodesic", rep.geodesic);
  const Json report{{"lambda", group_to_json(group)},
                    {"mu_hash", hex64(mu.hash())},
                    {"verdict", to_string(rep.verdict)},
                    {"evidence",
                     {{"walk", green_json(rep.walk)},
                      {"geodesic", green_json(rep.geodesic)},
                      {"walk_signature", to_string(rep.walk_signature)},
                      {"geodesic_signature", to_string(rep.geodesic_signature)},
                      {"target", {{"center", {t.ball.center.real(), t.ball.center.imag()}}, {"radius", t.ball.radius}}}}}};
  std::ofstream(file(ctx, o, "dichotomy.json")) << report.dump(2) << '\n';
  o.metrics["verdict"] = to_string(rep.verdict);
  o.metrics["walk_signature"] = to_string(rep.walk_signature);
  o.metrics["geodesic_signature"] = to_string(rep.geodesic_signature);
  o.metrics["walk_estimate"] = rep.walk.estimate;
  o.metrics["geodesic_estimate"] = rep.geodesic.estimate;
  if (rep.verdict == Verdict::inconsistent) o.warnings.push_back("walk and geodesic signatures disagree");
  if (rep.walk.flagged_reductions + rep.geodesic.flagged_reductions > 0)
    o.warnings.push_back("greedy cap reached during reduction");
  return o;
}

// volume-check -------------------------------------------------------------------

Outcome volume_check(Context& ctx, Params& p) {
  const auto t_grid = p.numbers("t_grid", grid(0.0, 20.0, 0.5), 0.0);
  const double r = p.number("r", 6.0, 0.0, true);
  const std::int64_t samples = p.integer64("samples", 2000000);
  if (ctx.dry_run) return {};

  Outcome o;
  const auto ratio = volume_density_ratio(t_grid);
  CsvWriter csv(file(ctx, o, "volume.csv"), {"t", "sigma_over_exp"});
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    csv << t_grid[i] << ratio[i];
    csv.end_row();
  }
  const VolumeCheck v = volume_monte_carlo(r, samples, ctx.seed);
  o.metrics["ratio_at_max_t"] = ratio.back();
  o.metrics["mc_volume"] = v.monte_carlo;
  o.metrics["mc_stderr"] = v.stderr_;
  o.metrics["exact_volume"] = v.exact;
  o.metrics["mc_relative_error"] = v.relative_error;
  return o;
}

}  // namespace

const std::map<std::string, Experiment>& experiments() {
  static const std::map<std::string, Experiment> table{
      {"cartan-selftest", {cartan_selftest, {"max_reconstruction_error", "max_inverse_error", "max_distance_error"}}},
      {"deviation",
       {deviation,
        {"zariski_screen", "seeds_used", "excluded_unstable", "best_seed_fraction", "r_star",
         "density_median_at_r_star", "density_median_max", "median_monotone"}}},
      {"angular",
       {angular, {"seeds_without_growth", "fraction_without_growth", "max_envelope", "unstable_seeds"}}},
      {"renewal",
       {renewal,
        {"lambda_hat", "renewal_limit", "horizon", "sup_mean_count", "max_relative_deviation_large_shifts",
         "within_band", "plateau_ratio", "reentry_probability", "tail_slope"}}},
      {"hitting", {hitting, {"l_star", "min_probability_at_l_star"}}},
      {"escape", {escape, {"n0"}}},
      {"quotient-green",
       {quotient_green,
        {"walk_estimate", "walk_tail_flag", "walk_last_decile_rate", "geodesic_estimate", "geodesic_tail_flag",
         "geodesic_last_decile_rate", "injectivity_radius", "k_ratio_spread", "k_injectivity_ok"}}},
      {"poincare",
       {poincare,
        {"delta_hat", "delta_stderr", "delta_wide", "orbit_points", "growth_diagnostic_at_1", "diverging_at_1",
         "partial_sum_at_1", "collision_rate", "discreteness_screen"}}},
      {"dichotomy",
       {dichotomy,
        {"zariski_screen", "verdict", "walk_signature", "geodesic_signature", "walk_estimate", "geodesic_estimate"}}},
      {"volume-check",
       {volume_check, {"ratio_at_max_t", "mc_volume", "mc_stderr", "exact_volume", "mc_relative_error"}}},
  };
  return table;
}

}  // namespace weylwalk::cli
