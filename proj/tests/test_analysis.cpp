#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace rsde;
using rsde::test::v1;
using rsde::test::v2;

namespace {

GridPath scalar_path(std::vector<double> t, std::vector<double> v, Interp interp) {
  GridPath z;
  z.times = std::move(t);
  for (double x : v) z.values.push_back(v1(x));
  z.interp = interp;
  return z;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.domain = Domain::half_space(v1(1.0), 0.0);
  c.coefficient = Coefficient::constant(Mat::Identity(1, 1));
  c.driver.kind = DriverSpec::Kind::brownian;
  c.driver.steps = 256;
  c.driver.dimension = 1;
  c.x0 = v1(0.2);
  c.mesh_ladder = {1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32};
  c.n_paths = 12;
  c.seed = 5;
  c.jobs = 1;
  return c;
}

}  // namespace

TEST(SupError, Examples) {
  const auto a = scalar_path({0, 0.5, 1}, {0, 1, 1}, Interp::cadlag_step);
  const auto b = scalar_path({0, 1}, {0, 1}, Interp::linear);
  // step vs ramp: the left limit of a at t = 0.5 is 0 while b is 0.5
  EXPECT_DOUBLE_EQ(sup_error(a, b, 1.0), 0.5);
  const auto c = scalar_path({0, 1}, {0, 0}, Interp::cadlag_step);
  const auto d = scalar_path({0, 0.999, 1}, {0, 0, 1}, Interp::cadlag_step);
  EXPECT_DOUBLE_EQ(sup_error(c, d, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(sup_error(c, d, 1.0, ErrorMode::fixed_times, std::vector<double>{0.0, 0.5}), 0.0);
  EXPECT_DOUBLE_EQ(sup_error(c, d, 1.0, ErrorMode::grid_points_of_a), 1.0);
  EXPECT_EQ(sup_error(a, a, 1.0), 0.0);
}

TEST(SupError, StepAgainstInterpolationOfTheSameGrid) {
  // same grid values, one cadlag step and one linear: uniform 1, grid 0
  const auto step = scalar_path({0, 1, 2}, {0, 1, 2}, Interp::cadlag_step);
  const auto lin = scalar_path({0, 1, 2}, {0, 1, 2}, Interp::linear);
  EXPECT_DOUBLE_EQ(sup_error(step, lin, 2.0), 1.0);
  EXPECT_DOUBLE_EQ(sup_error(step, lin, 2.0, ErrorMode::grid_points_of_a), 0.0);
}

TEST(SupError, ShortPathIsRejected) {
  const auto a = scalar_path({0, 0.5}, {0, 1}, Interp::linear);
  const auto b = scalar_path({0, 1}, {0, 1}, Interp::linear);
  EXPECT_THROW(sup_error(a, b, 1.0), Error);
}

TEST(SupError, IsAPseudometricOnRandomPaths) {
  test::Rand r(8);
  for (int i = 0; i < 100; ++i) {
    auto a = test::random_path(r, 2, 20, 0.5, v2(0, 0));
    auto b = test::random_path(r, 2, 13, 0.5, v2(0, 0));
    auto c = test::random_path(r, 2, 7, 0.5, v2(0, 0));
    if (i % 2) b.interp = Interp::linear;
    const double ab = sup_error(a, b, 1.0), ba = sup_error(b, a, 1.0);
    EXPECT_DOUBLE_EQ(ab, ba);
    EXPECT_LE(sup_error(a, c, 1.0), ab + sup_error(b, c, 1.0) + 1e-12);
  }
}

TEST(SupError, UniformModeIsTheExactSupremum) {
  // dense sampling never exceeds the reported value and gets close to it
  test::Rand r(9);
  for (int i = 0; i < 20; ++i) {
    auto a = test::random_path(r, 1, 9, 1.0, v1(0));
    auto b = test::random_path(r, 1, 5, 1.0, v1(0));
    a.interp = Interp::linear;
    const double s = sup_error(a, b, 1.0);
    double dense = 0.0;
    for (int k = 0; k <= 100000; ++k) {
      const double t = k / 100000.0;
      dense = std::max(dense, (a.at(t) - b.at(t)).norm());
    }
    EXPECT_LE(dense, s + 1e-12);
    EXPECT_GT(dense, s - 1e-3);
  }
}

TEST(Statistics, QuantileAndMedian) {
  EXPECT_DOUBLE_EQ(median({3, 1, 2}), 2.0);
  EXPECT_DOUBLE_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_DOUBLE_EQ(quantile({0, 10}, 0.9), 9.0);
  EXPECT_DOUBLE_EQ(quantile({5}, 0.9), 5.0);
  EXPECT_THROW(quantile({}, 0.5), Error);
}

TEST(Statistics, FitRate) {
  const std::vector<double> h{0.5, 0.25, 0.125}, e{0.5, 0.25 * 0.5 / 0.5, 0.125};
  const auto fit = fit_rate(h, e);
  EXPECT_NEAR(fit.slope, 1.0, 1e-12);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);
  const std::vector<double> sq{0.25, 0.0625, 0.015625};
  EXPECT_NEAR(fit_rate(h, sq).slope, 2.0, 1e-12);
  const std::vector<double> zeros{0, 0, 0};
  EXPECT_FALSE(fit_rate(h, zeros).defined());
}

TEST(ConvergenceStudy, ZeroCoefficientHasZeroErrorAndNoSlope) {
  auto c = small_config();
  c.coefficient = Coefficient::constant(Mat::Zero(1, 1));
  const auto t = convergence_study(c);
  ASSERT_EQ(t.rows.size(), 4u);
  for (const auto& r : t.rows) {
    EXPECT_EQ(r.err_unif_med, 0.0);
    EXPECT_EQ(r.failures, 0u);
  }
  EXPECT_FALSE(t.fit.defined());
}

TEST(ConvergenceStudy, DeterministicAcrossWorkerCounts) {
  auto c = small_config();
  const auto a = convergence_study(c);
  c.jobs = 4;
  const auto b = convergence_study(c);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t i = 0; i < a.rows.size(); ++i) {
    EXPECT_EQ(a.rows[i].err_unif_med, b.rows[i].err_unif_med);
    EXPECT_EQ(a.rows[i].err_grid_p90, b.rows[i].err_grid_p90);
    EXPECT_EQ(a.rows[i].kvar_max, b.rows[i].kvar_max);
  }
  EXPECT_EQ(a.fit.slope, b.fit.slope);
}

TEST(ConvergenceStudy, ProjectionErrorsDecrease) {
  auto c = small_config();
  c.observation = ObservationKind::partition_only;
  c.n_paths = 30;
  const auto t = convergence_study(c);
  for (std::size_t i = 1; i < t.rows.size(); ++i) EXPECT_LT(t.rows[i].err_grid_med, t.rows[i - 1].err_grid_med);
  EXPECT_GT(t.fit.slope, 0.2);
}

TEST(ConvergenceStudy, ClosedFormReference) {
  auto c = small_config();
  c.domain = Domain::half_space(v1(1.0), 0.0);
  c.coefficient = Coefficient::linear_diagonal(1, 1.0, {v1(0.0), 100.0});
  c.driver.kind = DriverSpec::Kind::jump;
  c.driver.jump_rate = 3.0;
  c.driver.jump_law = JumpLaw::uniform_ball(0.5);
  c.scheme = SchemeKind::jump_adapted;
  c.reference = ReferenceKind::closed_form_exponential;
  c.x0 = v1(1.0);
  const auto t = convergence_study(c);
  EXPECT_LT(t.rows.back().err_grid_med, t.rows.front().err_grid_med);
  EXPECT_EQ(t.rows.back().kvar_max, 0.0);
}

TEST(ConvergenceStudy, FailuresAreRecordedPerPath) {
  auto c = small_config();
  c.domain = Domain::exterior_ball(v1(0.0), 0.2);
  c.x0 = v1(0.2);
  c.driver.kind = DriverSpec::Kind::jump;
  c.driver.jump_rate = 20.0;
  c.driver.jump_law = JumpLaw::uniform_ball(2.0);
  c.driver.diffusion_scale = 0.0;
  const auto t = convergence_study(c);
  EXPECT_FALSE(t.failure_messages.empty());
  EXPECT_GT(t.rows.front().failures, 0u);
}

TEST(ConvergenceStudy, InvalidConfig) {
  auto c = small_config();
  c.mesh_ladder = {0.1, 0.2};
  EXPECT_THROW(convergence_study(c), Error);
  c = small_config();
  c.x0 = v1(-1.0);
  EXPECT_THROW(convergence_study(c), Error);
}

TEST(Remark4Report, DiskGapIsStable) {
  const std::vector<double> meshes{0.25, 0.125, 0.0625};
  const std::vector<int> substeps{256, 512};
  const auto rep = remark4_report(Remark4Setup::disk(), meshes, substeps);
  EXPECT_LT((rep.projection_endpoint - v2(std::sqrt(0.5), std::sqrt(0.5))).norm(), 1e-12);
  EXPECT_LT((rep.bar_endpoint - v2(0.6480, 0.7616)).norm(), 1e-3);
  // distance between the reflected-ODE and projection endpoints
  EXPECT_NEAR(rep.gap, (disk_gudermannian_endpoint() - rep.projection_endpoint).norm(), 1e-3);
  EXPECT_NEAR(rep.gap, 0.0804, 1e-3);
  EXPECT_TRUE(rep.gap_stable);
  EXPECT_TRUE(rep.gap_significant);
  EXPECT_EQ(rep.rows.size(), 6u);
}

TEST(Remark4Report, HalfLineHasNoGap) {
  const std::vector<double> meshes{0.5, 0.25};
  const std::vector<int> substeps{64, 128};
  const auto rep = remark4_report(Remark4Setup::half_line(), meshes, substeps);
  EXPECT_NEAR(rep.bar_endpoint[0], 0.0, 1e-12);
  EXPECT_NEAR(rep.projection_endpoint[0], 0.0, 1e-12);
  EXPECT_NEAR(rep.gap, 0.0, 1e-12);
}

TEST(Remark4Report, GudermannianOracle) {
  const Vec e = disk_gudermannian_endpoint();
  EXPECT_NEAR(e[0], 0.6480, 1e-4);
  EXPECT_NEAR(e[1], 0.7616, 1e-4);
  // gd(1) = 2 atan(tanh(1/2))
  EXPECT_NEAR(std::atan2(e[1], e[0]), 2.0 * std::atan(std::tanh(0.5)), 1e-14);
}

TEST(VariationLadder, Flags) {
  const auto f = Coefficient::constant(Mat::Identity(2, 2));
  const auto ball = Domain::ball(v2(0, 0), 1.0);
  const auto z = sample_brownian(1.0, 512, 2, 3);
  std::vector<SchemeOutput> runs;
  for (double h : {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64}) {
    SchemeSpec s;
    s.partition = Partition::uniform(1.0, h);
    runs.push_back(run_projection_scheme(ball, f, v2(0.5, 0.5), z, s));
  }
  const auto lad = variation_ladder(runs, 10.0);
  EXPECT_EQ(lad.k_totals.size(), 4u);
  EXPECT_GE(lad.max_k_total, lad.k_totals.front());
  EXPECT_TRUE(lad.within_factor);
  const std::vector<Interval> ivs{{0, 1}};
  EXPECT_TRUE(variation_report(runs.back(), ivs).lemma1.all_hold());
}
