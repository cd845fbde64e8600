#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "weylwalk/deviation.hpp"

using namespace weylwalk;

namespace {

GroupElement diag_exp(std::initializer_list<double> v) {
  Vector s(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) s(i++) = x;
  return GroupElement::diagonal_exp(s);
}

}  // namespace

TEST_CASE("diagonal dirac has no deviation") {
  const auto series = deviation_series(dirac(diag_exp({0.7, 0.1, -0.8})), 300, 1, 50);
  for (double v : series.dev) CHECK(v < 1e-9);
  for (const Matrix& r : series.angular_ratio) CHECK(r.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(series.occupancy(1e-6) == 1.0);
  CHECK(series.liminf_proxy(1e-6) == 1.0);
  CHECK_FALSE(series.unstable);
}

TEST_CASE("conjugated generator keeps a bounded, eventually constant deviation") {
  Matrix h(2, 2);
  h << 1.0, 0.8, 0.3, 1.5;
  const GroupElement hh(h);
  const GroupElement g = hh * diag_exp({0.5, -0.5}) * hh.inverse();
  const auto series = deviation_series(dirac(g), 400, 3, 100);
  const double bound = 2.0 * symspace_norm(hh) + 1e-9;
  for (double v : series.dev) CHECK(v <= bound);
  CHECK(std::abs(series.dev[399] - series.dev[200]) < 1e-8);
  CHECK(series.dev[399] > 1e-3);
}

TEST_CASE("deviation agrees with raw products on short prefixes") {
  // The raw oracle loses about exp(2 t_1) eps, so it is run in long double and
  // only while the root gap stays moderate.
  using MatrixL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  const MeasureSpec mu = reference_measure();
  int compared = 0;
  for (std::uint64_t seed : {5ULL, 6ULL, 7ULL}) {
    const int n = 25;
    const int burn = 1000;
    const auto series = deviation_series(mu, n, seed, burn);
    const auto rec = trajectory(mu, n + burn, seed, true);
    const MatrixL k_inf = rec.k_seq.back().cast<long double>();
    CounterRng rng(seed, 0);
    MatrixL p = MatrixL::Identity(2, 2);
    for (int i = 1; i <= n; ++i) {
      p = p * mu.sample(rng).matrix().cast<long double>();
      const Vector t = rec.t_seq[i - 1].values();
      if (t(0) - t(1) > 12.0) break;
      MatrixL m = k_inf.transpose() * p;
      for (int r = 0; r < 2; ++r) m.row(r) *= std::exp(-static_cast<long double>(t(r)));
      Eigen::JacobiSVD<MatrixL> svd(m);
      const double oracle = static_cast<double>(svd.singularValues().array().log().matrix().norm());
      CHECK(std::abs(series.dev[i - 1] - oracle) < 1e-6);
      ++compared;
    }
  }
  CHECK(compared >= 15);
}

TEST_CASE("occupancy and density are monotone in R") {
  const std::vector<double> grid{0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  const auto curve = density_curve(reference_measure(), grid, 2000, 8, 11, 0.2, 1000);
  CHECK(curve.per_seed.size() + curve.excluded_unstable == 8);
  CHECK(curve.density_median.front() == 0.0);
  for (std::size_t j = 1; j < grid.size(); ++j) {
    CHECK(curve.density_median[j] >= curve.density_median[j - 1]);
    CHECK(curve.density_p10[j] >= curve.density_p10[j - 1]);
  }
  CHECK(curve.density_median.back() > 0.5);
  const auto s = deviation_series(reference_measure(), 2000, 12, 1000);
  for (double r : grid) CHECK(s.liminf_proxy(r) <= s.occupancy(r) + 1e-12);
}

TEST_CASE("shift identity for flat distances") {
  const std::vector<int> steps{1, 2, 5, 10, 20, 40, 80, 160};
  for (const OppositeFlag& minus : spread_opposite_flags(2, 4)) {
    const auto rep = birkhoff_flat_distance(reference_measure(), minus, 200, 21, steps, 1.0, 1000);
    CHECK(rep.steps.size() + rep.skipped_conditioning + rep.skipped_transversality == steps.size());
    CHECK(rep.steps.size() >= 4);
    CHECK(rep.max_residual <= 1e-6);
    CHECK(rep.flat_distance.size() == 200);
  }
}

TEST_CASE("flat distance of a dirac walk follows the pulled-back flag") {
  // b = diag(e, 1/e): xi_b is the standard flag, pulled-back minus flags
  // converge to the standard opposite flag, so the flat distance tends to zero.
  Matrix rot = rotation2(0.3);
  const OppositeFlag minus = OppositeFlag::standard(2).act(rot);
  const auto rep = birkhoff_flat_distance(dirac(diag_exp({1.0, -1.0})), minus, 60, 1, {}, 0.5, 10);
  CHECK(rep.flat_distance.back() < 1e-10);
  CHECK(rep.flat_distance.front() > rep.flat_distance.back());
  CHECK(rep.indicator_mean > 0.9);
}

TEST_CASE("stationary flat mass") {
  int discarded = -1;
  const auto samples = stationary_samples(reference_measure(), 400, 31, 500, &discarded);
  CHECK(discarded >= 0);
  CHECK(samples.size() + discarded == 400);
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  const auto mass = stationary_flat_mass(samples, OppositeFlag::standard(2), grid);
  CHECK(mass.fraction.front() == 0.0);
  for (std::size_t j = 1; j < grid.size(); ++j) CHECK(mass.fraction[j] >= mass.fraction[j - 1]);
  CHECK(mass.fraction.back() > 0.99);
  CHECK(mass.smallest_r_two_thirds > 0.0);
}

TEST_CASE("angular ratios") {
  const auto diag = deviation_series(dirac(diag_exp({0.4, -0.4})), 500, 1, 50);
  for (const auto& e : angular_rate_check(diag)) CHECK_FALSE(e.growing);
  const auto s = deviation_series(reference_measure(), 4000, 41, 1000);
  const auto entries = angular_rate_check(s);
  REQUIRE(entries.size() == 2);
  for (const auto& e : entries) {
    CHECK(std::isfinite(e.envelope));
    if (e.in_claim) CHECK(e.envelope < 50.0);
  }
}

TEST_CASE("c0 envelope") {
  CHECK(c0_envelope({0.0, 2.0, 1.0}, {0.0, 1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(c0_envelope({}, {}) == 0.0);
}
