#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace rsde;
using rsde::test::v1;
using rsde::test::v2;

namespace {

GridPath step_path(std::vector<double> t, std::vector<double> v) {
  GridPath z;
  z.times = std::move(t);
  for (double x : v) z.values.push_back(v1(x));
  z.interp = Interp::cadlag_step;
  return z;
}

}  // namespace

TEST(GridPath, StepAndLinearEvaluation) {
  auto z = step_path({0, 0.5, 1}, {0, 1, 3});
  EXPECT_EQ(z.at(0.25)[0], 0.0);
  EXPECT_EQ(z.at(0.5)[0], 1.0);
  EXPECT_EQ(z.left_limit(0.5)[0], 0.0);
  z.interp = Interp::linear;
  EXPECT_DOUBLE_EQ(z.at(0.25)[0], 0.5);
  EXPECT_DOUBLE_EQ(z.at(0.75)[0], 2.0);
  EXPECT_DOUBLE_EQ(z.left_limit(0.5)[0], 1.0);
  // a recorded jump on a linear path: the segment aims at value - jump
  z.jumps.push_back({0.5, v1(0.5)});
  EXPECT_DOUBLE_EQ(z.at(0.25)[0], 0.25);
  EXPECT_DOUBLE_EQ(z.left_limit(0.5)[0], 0.5);
  EXPECT_DOUBLE_EQ(z.at(0.5)[0], 1.0);
}

TEST(SampleBrownian, Deterministic) {
  const auto a = sample_brownian(1.0, 64, 2, 5);
  const auto b = sample_brownian(1.0, 64, 2, 5);
  ASSERT_EQ(a.size(), 65u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.values[i], b.values[i]);
  EXPECT_EQ(a.times.back(), 1.0);
  EXPECT_EQ(a.values.front(), Vec::Zero(2));
  EXPECT_EQ(a.interp, Interp::linear);
}

TEST(SampleBrownian, SingleStep) {
  const auto z = sample_brownian(1.0, 1, 3, 8);
  ASSERT_EQ(z.size(), 2u);
  EXPECT_EQ(z.times, (std::vector<double>{0.0, 1.0}));
  EXPECT_TRUE(z.values[1].allFinite());
  EXPECT_GT(z.values[1].norm(), 0.0);
}

TEST(SampleBrownian, TerminalVarianceMonteCarlo) {
  // E|W_T|^2 = T d
  const double T = 1.5;
  const int d = 2, n = 10000;
  double acc = 0.0;
  for (int s = 0; s < n; ++s) acc += sample_brownian(T, 8, d, derive_seed(99, s)).values.back().squaredNorm();
  EXPECT_NEAR(acc / n, T * d, 0.05 * T * d);
}

TEST(SampleBrownian, InvalidSizes) {
  EXPECT_THROW(sample_brownian(1.0, 0, 1, 1), Error);
  EXPECT_THROW(sample_brownian(0.0, 4, 1, 1), Error);
}

TEST(SampleJumpDriver, ZeroRateIsBrownian) {
  const auto z = sample_jump_driver(1.0, 32, 2, 0.0, JumpLaw::uniform_ball(0.5), 1.0, 11);
  const auto w = sample_brownian(1.0, 32, 2, 11);
  ASSERT_EQ(z.size(), w.size());
  EXPECT_TRUE(z.jumps.empty());
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_EQ(z.values[i], w.values[i]);
}

TEST(SampleJumpDriver, PureJumpsArePiecewiseConstant) {
  const Vec v = v2(0.1, -0.2);
  const auto z = sample_jump_driver(2.0, 16, 2, 3.0, JumpLaw::fixed(v), 0.0, 12);
  ASSERT_FALSE(z.jumps.empty());
  z.validate();
  std::size_t count = 0;
  for (std::size_t i = 1; i < z.size(); ++i) {
    const Vec inc = z.values[i] - z.values[i - 1];
    if (const Jump* j = z.jump_at(z.times[i])) {
      EXPECT_LT((inc - j->size).norm(), 1e-15);
      ++count;
    } else {
      EXPECT_EQ(inc.norm(), 0.0);
    }
  }
  EXPECT_EQ(count, z.jumps.size());
  EXPECT_LT((z.values.back() - static_cast<double>(z.jumps.size()) * v).norm(), 1e-12);
}

TEST(SampleJumpDriver, MeanJumpCountMonteCarlo) {
  const double rate = 4.0, T = 1.0;
  const int n = 10000;
  double total = 0.0;
  for (int s = 0; s < n; ++s) {
    total += static_cast<double>(
        sample_jump_driver(T, 4, 1, rate, JumpLaw::uniform_ball(0.1), 0.0, derive_seed(5, s)).jumps.size());
  }
  EXPECT_NEAR(total / n, rate * T, 0.05 * rate * T);
}

TEST(SampleJumpDriver, RecordedSizeIsTheIncrement) {
  const auto z = sample_jump_driver(1.0, 16, 2, 10.0, JumpLaw::uniform_ball(0.3), 1.0, 6);
  ASSERT_FALSE(z.jumps.empty());
  for (const auto& j : z.jumps) {
    const auto i = z.index_at(j.time);
    EXPECT_EQ(j.size, z.values[i] - z.values[i - 1]);
  }
}

TEST(SampleJumpDriver, UniformBallSizesStayInBall) {
  const auto z = sample_jump_driver(5.0, 8, 3, 20.0, JumpLaw::uniform_ball(0.3), 0.0, 4);
  ASSERT_GT(z.jumps.size(), 10u);
  for (const auto& j : z.jumps) EXPECT_LE(j.size.norm(), 0.3 + 1e-12);
}

TEST(Discretize, Examples) {
  const auto c = step_path({0, 0.3, 1}, {2, 2, 2});
  const auto dc = discretize(c, Partition{{0, 0.5, 1}});
  for (const auto& v : dc.values) EXPECT_EQ(v[0], 2.0);
  EXPECT_TRUE(dc.jumps.empty());

  const auto z = step_path({0, 0.25, 0.5, 1}, {0, 1, -1, 3});
  const auto same = discretize(z, Partition{z.times});
  EXPECT_EQ(same.times, z.times);
  for (std::size_t i = 0; i < z.size(); ++i) EXPECT_EQ(same.values[i], z.values[i]);
  EXPECT_EQ(same.interp, Interp::cadlag_step);
  EXPECT_EQ(same.jumps.size(), 3u);

  GridPath lin = step_path({0, 1}, {0, 1});
  lin.interp = Interp::linear;
  const auto d = discretize(lin, Partition{{0, 0.5, 1}});
  EXPECT_EQ(d.values[1][0], 0.5);
  EXPECT_EQ(d.at(0.75)[0], 0.5);
  EXPECT_EQ(d.at(1.0)[0], 1.0);
}

TEST(LinearInterpolate, Examples) {
  const auto c = step_path({0, 0.4, 1}, {1, 1, 1});
  EXPECT_EQ(linear_interpolate(c, Partition{{0, 1}}).at(0.3)[0], 1.0);

  const auto s = step_path({0, 0.5, 1}, {0, 1, 1});
  const auto l = linear_interpolate(s, Partition{{0, 1}});
  EXPECT_DOUBLE_EQ(l.at(0.5)[0], 0.5);
  EXPECT_DOUBLE_EQ(l.at(0.9)[0], 0.9);

  const auto w = sample_brownian(1.0, 16, 2, 3);
  const auto p = Partition::uniform(1.0, 0.25);
  const auto li = linear_interpolate(w, p);
  for (double t : p.points) EXPECT_EQ(li.at(t), w.at(t));
  EXPECT_LT((li.at(0.125) - 0.5 * (w.at(0.0) + w.at(0.25))).norm(), 1e-15);
  EXPECT_TRUE(li.jumps.empty());
}

TEST(JumpAdaptedPartition, Examples) {
  const auto none = step_path({0, 1}, {0, 0});
  EXPECT_EQ(jump_adapted_partition(none, 4).points, (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));

  auto one = step_path({0, 0.3, 1}, {0, 1, 1});
  one.jumps.push_back({0.3, v1(1.0)});
  const auto p = jump_adapted_partition(one, 4);
  EXPECT_TRUE(std::find(p.points.begin(), p.points.end(), 0.3) != p.points.end());
  EXPECT_LE(p.mesh(), 0.25 + 1e-15);
  p.validate();

  auto small = step_path({0, 0.3, 1}, {0, 0.1, 0.1});
  small.jumps.push_back({0.3, v1(0.1)});
  const auto q = jump_adapted_partition(small, 4);
  EXPECT_EQ(q.points, (std::vector<double>{0, 0.25, 0.5, 0.75, 1}));
}

TEST(JumpAdaptedPartition, ContainsAllLargeJumpsProperty) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto z = sample_jump_driver(1.0, 100, 2, 10.0, JumpLaw::uniform_ball(0.8), 1.0, s);
    for (int n : {2, 5, 16}) {
      const auto p = jump_adapted_partition(z, n);
      p.validate();
      EXPECT_EQ(p.points.back(), 1.0);
      EXPECT_LE(p.mesh(), 1.0 / n + 1e-12);
      for (const auto& j : z.jumps) {
        if (j.size.norm() > 1.0 / n) {
          EXPECT_TRUE(std::binary_search(p.points.begin(), p.points.end(), j.time));
        }
      }
    }
  }
}

TEST(QuadraticVariation, PureJumpAndZero) {
  const Vec v = v2(0.3, 0.4);
  auto z = sample_jump_driver(1.0, 10, 2, 5.0, JumpLaw::fixed(v), 0.0, 21);
  const auto qv = quadratic_variation(z, Partition{z.times});
  const auto k = static_cast<double>(z.jumps.size());
  EXPECT_NEAR(qv.jump.values.back()[0], k * 0.25, 1e-12);
  EXPECT_NEAR(qv.total.values.back()[0], k * 0.25, 1e-12);
  EXPECT_NEAR(qv.continuous.values.back()[0], 0.0, 1e-24);

  const auto zero = step_path({0, 0.5, 1}, {0, 0, 0});
  const auto q0 = quadratic_variation(zero, Partition::uniform(1.0, 0.1));
  for (const auto* g : {&q0.total, &q0.continuous, &q0.jump})
    for (const auto& x : g->values) EXPECT_EQ(x[0], 0.0);
}

TEST(QuadraticVariation, BrownianApproachesTime) {
  double acc = 0.0;
  const int paths = 20;
  for (int s = 0; s < paths; ++s) {
    const auto w = sample_brownian(1.0, 10000, 1, derive_seed(77, s));
    acc += quadratic_variation(w, Partition{w.times}).total.values.back()[0];
  }
  EXPECT_NEAR(acc / paths, 1.0, 0.05);
}

TEST(QuadraticVariation, PartsNonnegativeAndNondecreasing) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto z = sample_jump_driver(1.0, 50, 2, 6.0, JumpLaw::uniform_ball(0.5), 0.7, s);
    const auto qv = quadratic_variation(z, Partition::uniform(1.0, 0.05));
    for (const auto* g : {&qv.total, &qv.continuous, &qv.jump}) {
      for (std::size_t i = 1; i < g->size(); ++i) {
        EXPECT_GE(g->values[i][0], g->values[i - 1][0]);
        EXPECT_GE(g->values[i][0], 0.0);
      }
    }
  }
}

TEST(CheckJumpCondition, Examples) {
  auto z = step_path({0, 0.5, 1}, {0, 0.5, 0.5});
  z.jumps.push_back({0.5, v1(0.5)});
  EXPECT_TRUE(check_jump_condition(z, 1.0, kInf));
  EXPECT_TRUE(check_jump_condition(z, 1.0, 1.0));
  auto big = step_path({0, 0.5, 1}, {0, 1.5, 1.5});
  big.jumps.push_back({0.5, v1(1.5)});
  EXPECT_FALSE(check_jump_condition(big, 1.0, 1.0));
  EXPECT_TRUE(check_jump_condition(big, 1.0, kInf));
}

TEST(DriverProperty, DiscretizationConvergesAwayFromJumps) {
  // a path with known jumps: sin(2 pi t) + jumps at 0.3 and 0.7
  GridPath z;
  z.interp = Interp::linear;
  const int n = 4096;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    z.times.push_back(t);
    z.values.push_back(v1(std::sin(2 * std::numbers::pi * t)));
  }
  double prev = kInf;
  for (int m : {8, 32, 128, 512}) {
    Partition p = Partition::uniform(1.0, 1.0 / m);
    const auto d = discretize(z, p);
    double worst = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) worst = std::max(worst, (d.at(z.times[i]) - z.values[i]).norm());
    EXPECT_LT(worst, prev);
    prev = worst;
  }
  EXPECT_LT(prev, 0.02);
}
