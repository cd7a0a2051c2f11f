#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "l1verify/reach.hpp"

using namespace l1v;

namespace {

// Exact flow of x' = diag(a) x on the grid.
Simulator linear_diag(Eigen::VectorXd a) {
  return [a](const Eigen::VectorXd& x0, double t_f, double dt) {
    const auto n = static_cast<Eigen::Index>(std::llround(t_f / dt));
    Eigen::MatrixXd out(n + 1, x0.size());
    for (Eigen::Index k = 0; k <= n; ++k)
      for (Eigen::Index i = 0; i < x0.size(); ++i)
        out(k, i) = x0(i) * std::exp(a(i) * static_cast<double>(k) * dt);
    return out;
  };
}

Simulator scalar(double lambda) { return linear_diag(Eigen::VectorXd::Constant(1, lambda)); }

HyperRect interval(double lo, double hi) {
  return HyperRect(Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi));
}

}  // namespace

TEST(PacSampleCount, Examples) {
  EXPECT_EQ(pac_sample_count(0.05, 0.01), 90);
  EXPECT_EQ(pac_sample_count(0.5, 0.5), 1);
  EXPECT_THROW(pac_sample_count(0.0, 0.1), Error);
  EXPECT_THROW(pac_sample_count(0.1, 1.0), Error);
}

TEST(PacSampleCount, MonotoneInEpsilonAndDelta) {
  for (double d : {0.5, 0.1, 0.01, 1e-4}) {
    EXPECT_GT(pac_sample_count(0.01, d), pac_sample_count(0.05, d));
    int prev = 1 << 30;
    for (double e = 0.01; e < 0.9; e += 0.01) {
      const int k = pac_sample_count(e, d);
      EXPECT_LE(k, prev);
      // k is the smallest count with (1 - e)^k <= d
      EXPECT_LE(std::pow(1.0 - e, k), d * (1 + 1e-12));
      if (k > 1) EXPECT_GT(std::pow(1.0 - e, k - 1), d);
      prev = k;
    }
  }
}

TEST(Sampling, SplitMixReferenceValue) {
  EXPECT_EQ(detail::splitmix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Sampling, CenterFirstAndInsideBox) {
  const HyperRect box(Eigen::Vector3d(0, -1, 5), Eigen::Vector3d(1, 1, 5));
  EXPECT_EQ(sample_initial(box, 1, 3).size(), 1u);
  const auto pts = sample_initial(box, 200, 3);
  ASSERT_EQ(pts.size(), 200u);
  EXPECT_EQ(pts[0], box.center());
  std::set<double> distinct;
  for (const auto& p : pts) {
    EXPECT_TRUE(box.contains(p));
    EXPECT_EQ(p(2), 5.0);
    distinct.insert(p(0));
  }
  EXPECT_EQ(distinct.size(), 200u);
}

TEST(Sampling, ZeroWidthBoxRepeatsPoint) {
  const HyperRect box(Eigen::Vector2d(1, 2), Eigen::Vector2d(1, 2));
  for (const auto& p : sample_initial(box, 7, 99)) EXPECT_EQ(p, Eigen::Vector2d(1, 2));
}

TEST(Sampling, DeterministicAndSeedDependent) {
  const HyperRect box(Eigen::Vector2d(0, 0), Eigen::Vector2d(1, 1));
  const auto a = sample_initial(box, 50, 1), b = sample_initial(box, 50, 1), c = sample_initial(box, 50, 2);
  EXPECT_EQ(a, b);
  EXPECT_NE(a[1], c[1]);
  // Prefix stability: a sample depends only on (seed, index, dim).
  const auto d = sample_initial(box, 10, 1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a[i], d[i]);
}

TEST(Sampling, RoughlyUniform) {
  int below = 0;
  for (std::uint64_t i = 0; i < 20000; ++i) below += counter_uniform(5, i, 0) < 0.25;
  EXPECT_NEAR(below / 20000.0, 0.25, 0.015);
}

TEST(LearnDiscrepancy, IdenticalTrajectories) {
  const Eigen::MatrixXd c = scalar(-1.0)(Eigen::VectorXd::Constant(1, 1.0), 2.0, 0.01);
  const auto m = learn_discrepancy(c, {c}, Eigen::VectorXd::Constant(1, 0.5), 0.01, 10);
  EXPECT_TRUE(m.degenerate[0]);
  for (const auto& seg : m.dims[0]) {
    EXPECT_EQ(seg.K, 1.0);
    EXPECT_EQ(seg.gamma, 0.0);
  }
}

TEST(LearnDiscrepancy, ScalarExponents) {
  for (double lambda : {-1.0, 0.5}) {
    const Simulator sim = scalar(lambda);
    const Eigen::MatrixXd c = sim(Eigen::VectorXd::Constant(1, 1.0), 2.0, 0.01);
    const Eigen::MatrixXd o = sim(Eigen::VectorXd::Constant(1, 1.1), 2.0, 0.01);
    const auto m = learn_discrepancy(c, {o}, Eigen::VectorXd::Constant(1, 0.1), 0.01, 10);
    ASSERT_EQ(m.dims[0].size(), 10u);
    for (const auto& seg : m.dims[0]) {
      EXPECT_NEAR(seg.gamma, lambda, 0.02 * std::abs(lambda));
      EXPECT_GE(seg.K, 1.0);
      EXPECT_LE(seg.K, 1.05);
    }
  }
}

TEST(LearnDiscrepancy, SegmentsPartitionGrid) {
  const auto b = segment_bounds(500, 10);
  ASSERT_EQ(b.size(), 11u);
  EXPECT_EQ(b.front(), 0);
  EXPECT_EQ(b.back(), 500);
  for (std::size_t j = 1; j < b.size(); ++j) EXPECT_EQ(b[j] - b[j - 1], 50);
  EXPECT_EQ(segment_bounds(3, 10).size(), 4u);
}

TEST(Reachtube, ScalarSystemsContainAnalyticInterval) {
  for (double lambda : {-1.0, 0.5}) {
    ReachOptions opt;
    const auto res = compute_reachtube(scalar(lambda), interval(1.0, 2.0), 2.0, 0.01, opt);
    const Reachtube& tube = res.tube;
    ASSERT_EQ(tube.size(), 201);
    for (Eigen::Index k = 0; k < tube.size(); ++k) {
      const double e = std::exp(lambda * tube.time(k));
      EXPECT_LE(tube.lo(k, 0), e * (1 + 1e-12));
      EXPECT_GE(tube.hi(k, 0), 2.0 * e * (1 - 1e-12));
      EXPECT_LE(tube.lo(k, 0), tube.center(k, 0));
      EXPECT_GE(tube.hi(k, 0), tube.center(k, 0));
    }
    const double width = tube.hi(100, 0) - tube.lo(100, 0);
    EXPECT_LE(width, 1.15 * std::exp(lambda));
    if (lambda < 0) {
      EXPECT_LE(tube.lo(100, 0), 0.36788);
      EXPECT_GE(tube.hi(100, 0), 0.73575);
    }
  }
}

TEST(Reachtube, DiagonalSystemMatchesAnalyticRadii) {
  Eigen::VectorXd a(3), lo(3), hi(3);
  a << -1.0, 0.5, -2.0;
  lo << 1.0, -1.0, 0.0;
  hi << 2.0, 1.0, 0.2;
  const HyperRect x0(lo, hi);
  ReachOptions opt;
  const auto res = compute_reachtube(linear_diag(a), x0, 2.0, 0.01, opt);
  for (Eigen::Index k = 0; k < res.tube.size(); ++k) {
    for (Eigen::Index i = 0; i < 3; ++i) {
      const double r = 0.5 * (res.tube.hi(k, i) - res.tube.lo(k, i));
      const double analytic = x0.half_width()(i) * std::exp(a(i) * res.tube.time(k));
      EXPECT_NEAR(r, analytic, 0.1 * analytic) << "k " << k << " dim " << i;
    }
  }
}

TEST(Reachtube, ZeroWidthInitialSet) {
  Eigen::VectorXd a(2), p(2);
  a << -1.0, 0.3;
  p << 1.0, 2.0;
  const auto res = compute_reachtube(linear_diag(a), HyperRect(p, p), 1.0, 0.01, ReachOptions{});
  EXPECT_LE((res.tube.hi - res.tube.lo).cwiseAbs().maxCoeff(), 2 * kSeparationFloor * (1 + 1e-6));
  EXPECT_TRUE(res.tube.contains(res.tube.center));
}

TEST(Reachtube, BloatingIsLinearInInitialRadius) {
  Eigen::VectorXd a(2), lo(2), hi(2);
  a << -0.5, 0.2;
  lo << 0.0, 0.0;
  hi << 1.0, 0.5;
  const auto res = compute_reachtube(linear_diag(a), HyperRect(lo, hi), 1.0, 0.01, ReachOptions{});
  const Eigen::MatrixXd r1 = res.model.radii();
  const Eigen::MatrixXd r2 = res.model.radii(2.0 * res.model.initial_radius);
  EXPECT_LE((r2 - 2.0 * r1).cwiseAbs().maxCoeff(), 1e-12 * r2.cwiseAbs().maxCoeff());
  for (Eigen::Index k = 0; k < r1.rows(); ++k)
    for (Eigen::Index i = 0; i < 2; ++i) EXPECT_LE(r2(k, i), 2.0 * r1(k, i) * (1 + 1e-15));
}

TEST(Reachtube, TrainingContainmentAndFreshSamples) {
  const Scenario sc = Scenario::defaults();
  ReachOptions opt;
  opt.threads = 2;
  const auto res = compute_reachtube(sc, opt);
  ASSERT_EQ(res.training.size(), 90u);
  for (const auto& tr : res.training) EXPECT_TRUE(res.tube.contains(tr));
  const int inside = count_contained(res.tube, make_simulator(sc), sc.x0, sc.t_f, 500, 1001, 2);
  EXPECT_GE(inside, 495);
}

TEST(Reachtube, IndependentOfThreadCount) {
  Scenario sc = Scenario::defaults();
  sc.t_f = 2.0;
  ReachOptions opt;
  opt.samples = 20;
  opt.threads = 1;
  const auto one = compute_reachtube(sc, opt);
  opt.threads = 4;
  const auto four = compute_reachtube(sc, opt);
  EXPECT_EQ(one.tube.lo, four.tube.lo);
  EXPECT_EQ(one.tube.hi, four.tube.hi);
}

TEST(Reachtube, ParallelForRethrowsLowestIndex) {
  try {
    parallel_for(10, 3, [](std::size_t i) {
      if (i == 4 || i == 7) throw std::runtime_error(std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "4");
  }
}

TEST(Safety, ThreeVerdicts) {
  // x' = -x with a clock as second state, so a box can be pinned to one time.
  const Simulator sim = [](const Eigen::VectorXd& x0, double t_f, double dt) {
    const auto n = static_cast<Eigen::Index>(std::llround(t_f / dt));
    Eigen::MatrixXd out(n + 1, 2);
    for (Eigen::Index k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) * dt;
      out(k, 0) = x0(0) * std::exp(-t);
      out(k, 1) = x0(1) + t;
    }
    return out;
  };
  const HyperRect x0(Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(2.0, 0.0));
  const auto res = compute_reachtube(sim, x0, 2.0, 0.01, ReachOptions{});
  const Reachtube& tube = res.tube;
  const Eigen::Index last = tube.size() - 1;

  EXPECT_EQ(check_safety(tube, HyperRect(Eigen::Vector2d(10, -1), Eigen::Vector2d(11, 5)), res.training),
            Verdict::Safe);
  EXPECT_EQ(check_safety(tube, HyperRect(Eigen::Vector2d(1.49, -0.1), Eigen::Vector2d(1.51, 0.1)), res.training),
            Verdict::Unsafe);

  double envelope = -INFINITY;
  for (const auto& w : res.training) envelope = std::max(envelope, w(last, 0));
  const double top = tube.hi(last, 0);
  ASSERT_GT(top, envelope);
  const HyperRect margin(Eigen::Vector2d(0.5 * (envelope + top), 2.0 - 1e-6),
                         Eigen::Vector2d(top, 3.0));
  for (const auto& w : res.training)
    for (Eigen::Index k = 0; k < w.rows(); ++k) ASSERT_FALSE(margin.contains(w.row(k).transpose()));
  EXPECT_EQ(check_safety(tube, margin, res.training), Verdict::Unknown);
}

TEST(Safety, EmptyTubeRejected) {
  Reachtube empty;
  EXPECT_THROW(check_safety(empty, interval(0, 1), {}), Error);
}

TEST(Reachtube, FreshMonteCarloStaysInside) {
  Scenario sc = Scenario::defaults();
  for (bool l1 : {false, true}) {
    sc.l1.enabled = l1;
    const auto res = compute_reachtube(sc, ReachOptions{});
    EXPECT_EQ(count_contained(res.tube, make_simulator(sc), sc.x0, sc.t_f, 200, 7), 200) << "l1 " << l1;
  }
}
