#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "weylwalk/stats.hpp"
#include "weylwalk/walk.hpp"

using namespace weylwalk;

namespace {

GroupElement diag2(double c) {
  Vector s(2);
  s << c, -c;
  return GroupElement::diagonal_exp(s);
}

}  // namespace

TEST_CASE("measure validation") {
  CHECK_THROWS_AS(MeasureSpec(std::vector<Atom>{}), InvalidInput);
  CHECK_THROWS_AS(MeasureSpec({{diag2(1.0), 0.5}, {diag2(2.0), 0.4}}), InvalidInput);
  CHECK_THROWS_AS(MeasureSpec({{diag2(1.0), 0.5}, {GroupElement::identity(3), 0.5}}), InvalidInput);
  const MeasureSpec ref = reference_measure();
  CHECK(ref.atoms().size() == 2);
  CHECK(ref.hash() == reference_measure().hash());
  CHECK(ref.hash() != dirac(diag2(1.0)).hash());
}

TEST_CASE("deterministic diagonal walk") {
  const MeasureSpec mu = dirac(diag2(1.0));
  const TrajectoryRecord rec = trajectory(mu, 10, 123);
  for (int n = 1; n <= 10; ++n) {
    CHECK(rec.t_seq[n - 1][0] == doctest::Approx(n).epsilon(1e-13));
    CHECK(rec.t_seq[n - 1][1] == doctest::Approx(-n).epsilon(1e-13));
    CHECK((rec.k_seq[n - 1] - Matrix::Identity(2, 2)).norm() < 1e-13);
  }
  const LyapunovEstimate est = lyapunov_estimate(mu, 200, 4, 1);
  CHECK(est.mean[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(est.stderr_(0) < 1e-12);
  const LimitFlagEstimate lf = limit_flag(rec);
  CHECK(flag_distance(lf.flag, FlagPoint::standard(2)) < 1e-12);
  const auto roots = root_growth_check(rec);
  REQUIRE(roots.size() == 1);
  CHECK(roots[0].slope == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("compact walk stays at the origin") {
  const MeasureSpec mu = dirac(GroupElement(rotation2(0.4)));
  const TrajectoryRecord rec = trajectory(mu, 50, 1);
  for (const auto& t : rec.t_seq) CHECK(t.norm() < 1e-12);
  const auto roots = root_growth_check(rec);
  CHECK(std::abs(roots[0].slope) < 1e-12);
  CHECK_FALSE(roots[0].positive);
  CHECK_FALSE(zariski_screen(mu, 1, 2000).passed);
}

TEST_CASE("factored product matches the raw product") {
  const MeasureSpec ref = reference_measure();
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.6);
  std::vector<GroupElement> atoms3;
  for (int a = 0; a < 3; ++a) {
    Matrix m = Matrix::Identity(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) += n(rng);
    if (m.determinant() < 0) m.col(0) *= -1.0;
    atoms3.emplace_back(m);
  }
  for (const MeasureSpec& mu : {ref, uniform_measure(atoms3)}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      WalkState s = WalkState::start(mu.dim(), CounterRng(seed, 0));
      WalkState replay = s;
      Matrix raw = Matrix::Identity(mu.dim(), mu.dim());
      for (int step = 0; step < 30; ++step) {
        raw = raw * mu.sample(replay.rng).matrix();
        s = advance(std::move(s), mu);
        CHECK((s.factored.reconstruct() - raw).norm() / raw.norm() < 1e-8);
        CHECK((align_frame(s.factored.k, s.k_aligned).cwiseAbs() - s.factored.k.cwiseAbs()).norm() < 1e-12);
      }
    }
  }
}

TEST_CASE("cartan projection of the inverse product") {
  const MeasureSpec mu = reference_measure();
  WalkState s = WalkState::start(2, CounterRng(7, 0));
  std::vector<GroupElement> incs;
  CounterRng replay(7, 0);
  for (int i = 0; i < 300; ++i) {
    incs.push_back(mu.sample(replay));
    s = advance(std::move(s), mu);
  }
  WalkState inv = WalkState::start(2, CounterRng(0, 0));
  for (auto it = incs.rbegin(); it != incs.rend(); ++it) inv = advance_by(std::move(inv), it->inverse());
  CHECK((inv.factored.t.values() - s.factored.t.opposite().values()).norm() < 1e-8 * s.factored.t.norm());
}

TEST_CASE("trajectories are reproducible and seed dependent") {
  const MeasureSpec mu = reference_measure();
  const TrajectoryRecord a = trajectory(mu, 200, 99);
  const TrajectoryRecord b = trajectory(mu, 200, 99);
  const TrajectoryRecord c = trajectory(mu, 200, 100);
  bool identical = true, differ = false;
  for (int i = 0; i < 200; ++i) {
    identical = identical && (a.t_seq[i].values().array() == b.t_seq[i].values().array()).all() &&
                (a.k_seq[i].array() == b.k_seq[i].array()).all();
    differ = differ || (a.t_seq[i].values() - c.t_seq[i].values()).norm() > 1e-9;
  }
  CHECK(identical);
  CHECK(differ);
}

TEST_CASE("lyapunov estimates") {
  SUBCASE("diagonal symmetric walk behaves like |S_n|") {
    const MeasureSpec mu = uniform_measure({diag2(1.0), diag2(-1.0)});
    const int n = 400;
    const LyapunovEstimate est = lyapunov_estimate(mu, n, 400, 3);
    // E|S_n| ~ sqrt(2 n / pi) for the simple random walk.
    const double expected = std::sqrt(2.0 * n / std::numbers::pi) / n;
    CHECK(est.mean[0] == doctest::Approx(expected).epsilon(0.12));
    CHECK_FALSE(zariski_screen(mu, 3, 4000).passed);
  }
  SUBCASE("reference measure is reproducible across seed batches") {
    const MeasureSpec mu = reference_measure();
    const LyapunovEstimate a = lyapunov_estimate(mu, 1000, 40, 1);
    const LyapunovEstimate b = lyapunov_estimate(mu, 1000, 40, 2);
    CHECK(a.zariski_dense_signature);
    CHECK(std::abs(a.mean[0] - b.mean[0]) < 3.0 * std::hypot(a.stderr_(0), b.stderr_(0)));
    CHECK(zariski_screen(mu).passed);
  }
}

TEST_CASE("limit flags") {
  SUBCASE("conjugated diagonal generator converges to its eigenflag") {
    Matrix h(2, 2);
    h << 1.0, 0.7, -0.3, 1.2;
    const GroupElement hg(h);
    const GroupElement g = hg * diag2(0.5) * hg.inverse();
    const TrajectoryRecord rec = trajectory(dirac(g), 80, 0);
    Eigen::EigenSolver<Matrix> eig(g.matrix());
    Matrix vecs = eig.eigenvectors().real();
    if (eig.eigenvalues().real()(0) < eig.eigenvalues().real()(1)) vecs = vecs.rowwise().reverse().eval();
    const LimitFlagEstimate lf = limit_flag(rec);
    CHECK_FALSE(lf.unstable);
    CHECK(flag_distance(lf.flag, FlagPoint(vecs)) < 1e-10);
  }
  SUBCASE("median flag error shrinks along random trajectories") {
    const MeasureSpec mu = reference_measure();
    std::vector<double> medians;
    std::vector<std::vector<double>> errs(4);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const TrajectoryRecord rec = trajectory(mu, 400, seed);
      const FlagPoint limit = limit_flag(rec).flag;
      const int checkpoints[] = {2, 4, 6, 8};
      for (int c = 0; c < 4; ++c) errs[c].push_back(flag_distance(FlagPoint(rec.k_seq[checkpoints[c] - 1]), limit));
    }
    for (const auto& e : errs) medians.push_back(quantile(e, 0.5));
    for (std::size_t i = 1; i < medians.size(); ++i) CHECK(medians[i] < medians[i - 1]);
  }
  SUBCASE("aligned frames form a Cauchy sequence") {
    WalkState s = WalkState::start(2, CounterRng(5, 0));
    const MeasureSpec mu = reference_measure();
    Matrix at1000;
    for (int i = 1; i <= 2000; ++i) {
      s = advance(std::move(s), mu);
      if (i == 1000) at1000 = s.k_aligned;
    }
    CHECK((s.k_aligned - at1000).norm() < 1e-8);
  }
}

TEST_CASE("root growth on the reference measure") {
  const MeasureSpec mu = reference_measure();
  int positive = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto roots = root_growth_check(trajectory(mu, 500, seed, false));
    positive += roots[0].positive ? 1 : 0;
  }
  CHECK(positive >= 99);
}
