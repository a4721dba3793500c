#include <qtraj/dynamics.hpp>
#include <qtraj/sim.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace qtraj;

namespace {

LevelSlopePair make_pair(std::size_t i, double x, double z)
{
  LevelSlopePair p;
  p.subject_id = "p" + std::to_string(i);
  p.level = x;
  p.slope = z;
  p.n_obs = 3;
  p.time_span = 2;
  p.last_level = x;
  return p;
}

SnippetDataset constant_slope_data(double c)
{
  std::vector<LevelSlopePair> pairs;
  for (int i = 0; i <= 100; ++i)
    pairs.push_back(make_pair(i, 0.01 * i, c));
  return build_dataset(std::move(pairs));
}

SnippetDataset true_xz(std::size_t n, std::uint64_t seed, Interval b = {0.3, 0.5})
{
  sim::SimulationConfig cfg;
  cfg.n = n;
  cfg.seed = seed;
  cfg.b_range = b;
  return sim::generate_snippets(cfg).dataset;
}

} // namespace

TEST(QuantileTrajectory, DegenerateDataGivesStraightLine)
{
  auto ds = constant_slope_data(-0.1);
  auto cdf = fit_kernel(ds, {KernelKind::gaussian, 0.05, 1});
  auto sol = quantile_trajectory(cdf, 0.3, 0.9, {IntegratorMethod::euler, 0.05, 5.0});
  ASSERT_TRUE(sol.complete());
  EXPECT_EQ(sol.values[0], 0.9);
  for (std::size_t i = 0; i < sol.values.size(); ++i)
    EXPECT_NEAR(sol.values[i], 0.9 - 0.1 * sol.s[i], 1e-12);
  auto mean = mean_trajectory(ds, {KernelKind::gaussian, 0.05, 1}, 0.9,
                              {IntegratorMethod::euler, 0.05, 5.0});
  for (std::size_t i = 0; i < sol.values.size(); ++i)
    EXPECT_NEAR(mean.values[i], sol.values[i], 1e-12);
}

TEST(QuantileTrajectory, OrderedInAlpha)
{
  auto ds = true_xz(1000, 31);
  auto cdf = fit_joint_kernel(ds, {KernelKind::gaussian, 0.01, 0.001});
  const auto spec = IntegratorSpec::over(8.0);
  std::vector<TrajectorySolution> sols;
  for (double a : {0.1, 0.25, 0.5, 0.75, 0.9})
    sols.push_back(quantile_trajectory(cdf, a, 0.4, spec));
  for (std::size_t k = 0; k + 1 < sols.size(); ++k) {
    const auto m = std::min(sols[k].values.size(), sols[k + 1].values.size());
    for (std::size_t i = 0; i < m; ++i)
      EXPECT_LE(sols[k].values[i], sols[k + 1].values[i] + 2e-8);
  }
  // negative gradient everywhere: strictly decreasing
  for (std::size_t i = 1; i < sols[2].values.size(); ++i)
    EXPECT_LT(sols[2].values[i], sols[2].values[i - 1]);
}

TEST(QuantileTrajectory, MedianEqualsMeanUnderSymmetry)
{
  // at every level the slopes are symmetric about -level
  std::vector<LevelSlopePair> pairs;
  std::size_t id = 0;
  for (int i = 0; i <= 1000; ++i) {
    const double x = 0.1 + 0.0009 * i;
    for (double d : {-0.2, -0.05, 0.05, 0.2})
      pairs.push_back(make_pair(id++, x, -x + d));
  }
  auto ds = build_dataset(std::move(pairs));
  const KernelSpec k{KernelKind::gaussian, 0.01, 0.01};
  const IntegratorSpec spec{IntegratorMethod::rk4, 0.01, 1.0};
  auto median = quantile_trajectory(fit_joint_kernel(ds, k), 0.5, 0.9, spec);
  auto mean = mean_trajectory(ds, k, 0.9, spec);
  ASSERT_TRUE(median.complete() && mean.complete());
  for (std::size_t i = 0; i < mean.values.size(); ++i) {
    EXPECT_NEAR(median.values[i], mean.values[i], 1e-3);
    // and both follow dz/ds = -z
    EXPECT_NEAR(mean.values[i], 0.9 * std::exp(-mean.s[i]), 2e-3);
  }
}

TEST(SlopeField, DegenerateAndOutsideSupport)
{
  auto cdf = fit_kernel(constant_slope_data(-0.25), {KernelKind::gaussian, 0.05, 1});
  std::vector<double> levels{0.2, 0.5, 3.0};
  auto field = slope_field(cdf, 0.5, levels);
  ASSERT_EQ(field.size(), 3u);
  EXPECT_EQ(field[0].slope, -0.25);
  EXPECT_EQ(field[1].slope, -0.25);
  EXPECT_FALSE(field[2].slope.has_value());
  EXPECT_NE(field[2].error.find("outside"), std::string::npos);
}

TEST(SlopeField, MatchesMonteCarloOracle)
{
  auto cdf = fit_joint_kernel(true_xz(5000, 32), {KernelKind::gaussian, 0.01, 0.001});
  sim::OracleSample oracle({}, 1'000'000, 33);
  const double truth = oracle.bin_quantile(0.4, 0.5, 0.01);
  std::vector<double> at{0.4};
  auto field = slope_field(cdf, 0.5, at);
  ASSERT_TRUE(field[0].slope.has_value());
  EXPECT_NEAR(*field[0].slope, truth, 0.01);
}

TEST(AlphaStar, FourAtomMedianSlope)
{
  std::vector<LevelSlopePair> pairs;
  for (int z = 1; z <= 4; ++z)
    pairs.push_back(make_pair(z, 0.0, z));
  auto cdf = fit_kernel(build_dataset(pairs), {KernelKind::gaussian, 1, 1});
  EXPECT_EQ(estimate_alpha_star(make_pair(9, 0.0, 2.0), cdf), 0.5);
}

TEST(AlphaStar, LocalMedianAndClamp)
{
  std::vector<LevelSlopePair> pairs;
  for (int i = 0; i < 11; ++i)
    pairs.push_back(make_pair(i, 0.5, -1.0 + 0.2 * i));
  pairs.push_back(make_pair(99, 0.6, 0.0));
  auto ds = build_dataset(pairs);
  auto cdf = fit_joint_kernel(ds, {KernelKind::gaussian, 0.001, 1e-4});
  EXPECT_NEAR(estimate_alpha_star(make_pair(1, 0.5, 0.0), cdf), 0.5, 1e-8);
  EXPECT_EQ(estimate_alpha_star(make_pair(2, 0.5, -50.0), cdf), alpha_star_floor);
  EXPECT_EQ(estimate_alpha_star(make_pair(3, 0.5, 50.0), cdf), alpha_star_ceiling);
  EXPECT_THROW(estimate_alpha_star(make_pair(4, 2.0, 0.0), cdf), DomainError);
}

TEST(Schedule, LinearRamp)
{
  const PredictionSchedule sch{0.3, 0.9, 2.0};
  EXPECT_DOUBLE_EQ(alpha_schedule(sch, 1.0), 0.6);
  EXPECT_EQ(alpha_schedule(sch, 0.0), 0.3);
  EXPECT_EQ(alpha_schedule(sch, 2.0), 0.9);
  EXPECT_EQ(alpha_schedule(sch, 7.5), 0.9);
  EXPECT_THROW(alpha_schedule(sch, -1.0), ValidationError);
  EXPECT_THROW((PredictionSchedule{0.3, 0.9, 0.0}.validate()), ValidationError);
}

TEST(Prediction, ConstantScheduleMatchesQuantileTrajectory)
{
  auto ds = true_xz(500, 34);
  auto cdf = fit_joint_kernel(ds, {KernelKind::gaussian, 0.02, 0.002});
  const auto& subject = *ds.find(ds.pairs()[17].subject_id);
  const double a = estimate_alpha_star(subject, cdf);
  const IntegratorSpec spec{IntegratorMethod::euler, 0.02, 4.0};
  auto pred = prediction_trajectory(cdf, subject, a, spec);
  auto plain = quantile_trajectory(cdf, a, subject.last_level, spec);
  EXPECT_DOUBLE_EQ(pred.schedule.adherence, 0.5 * subject.time_span);
  ASSERT_EQ(pred.trajectory.values.size(), plain.values.size());
  for (std::size_t i = 0; i < plain.values.size(); ++i)
    EXPECT_NEAR(pred.trajectory.values[i], plain.values[i], 1e-9);
}

TEST(Prediction, DegenerateDataIgnoresTarget)
{
  auto ds = constant_slope_data(-0.1);
  auto cdf = fit_kernel(ds, {KernelKind::gaussian, 0.05, 1});
  const IntegratorSpec spec{IntegratorMethod::euler, 0.1, 3.0};
  for (double target : {0.1, 0.9}) {
    auto pred = prediction_trajectory(cdf, ds.pairs()[80], target, spec);
    for (std::size_t i = 0; i < pred.trajectory.values.size(); ++i)
      EXPECT_NEAR(pred.trajectory.values[i], 0.8 - 0.1 * pred.trajectory.s[i], 1e-12);
  }
}

TEST(Prediction, InitialSlopeFollowsAlphaStar)
{
  auto ds = true_xz(500, 35);
  auto cdf = fit_joint_kernel(ds, {KernelKind::gaussian, 0.02, 0.002});
  const auto& subject = ds.pairs()[3];
  const IntegratorSpec spec{IntegratorMethod::euler, 0.001, 0.1};
  auto pred = prediction_trajectory(cdf, subject, 0.9, spec);
  const double initial = (pred.trajectory.values[1] - pred.trajectory.values[0]) / 0.001;
  EXPECT_NEAR(initial, cdf.quantile(subject.last_level, pred.schedule.alpha_star), 1e-9);
}

TEST(Percentile, TypeSeven)
{
  std::vector<double> v{1, 2, 3, 4, 5};
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.5), 3.0);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.05), 1.2);
  EXPECT_DOUBLE_EQ(percentile_sorted(v, 0.95), 4.8);
}

class Bootstrap : public ::testing::Test
{
protected:
  CdfOptions options{CdfMethod::joint_kernel, KernelKind::gaussian, 0.03, 0.005, {}, 21};
  IntegratorSpec spec{IntegratorMethod::euler, 0.2, 6.0};
};

TEST_F(Bootstrap, SameDatasetBandsContainZero)
{
  auto ds = true_xz(200, 36);
  BootstrapSettings bs;
  bs.replicates = 100;
  bs.seed = 5;
  auto r = bootstrap_difference_bands(ds, ds, options, 0.5, 0.4, spec, bs);
  ASSERT_EQ(r.s.size(), spec.grid().size());
  for (std::size_t i = 0; i < r.s.size(); ++i) {
    EXPECT_EQ(r.point[i], 0.0);
    ASSERT_FALSE(r.undefined[i]);
    for (const auto& b : r.bands) {
      EXPECT_LE(b.lower[i], 0.0);
      EXPECT_GE(b.upper[i], 0.0);
    }
  }
}

TEST_F(Bootstrap, RequiresHundredReplicates)
{
  auto ds = true_xz(50, 37);
  BootstrapSettings bs;
  bs.replicates = 99;
  EXPECT_THROW(bootstrap_difference_bands(ds, ds, options, 0.5, 0.4, spec, bs), ValidationError);
}

TEST_F(Bootstrap, IndependentOfThreadCount)
{
  auto g1 = true_xz(150, 38);
  auto g2 = true_xz(150, 39);
  BootstrapSettings bs;
  bs.replicates = 100;
  bs.seed = 11;
  bs.threads = 1;
  auto a = bootstrap_difference_bands(g1, g2, options, 0.5, 0.4, spec, bs);
  bs.threads = 4;
  auto b = bootstrap_difference_bands(g1, g2, options, 0.5, 0.4, spec, bs);
  for (std::size_t i = 0; i < a.s.size(); ++i) {
    for (std::size_t c = 0; c < a.bands.size(); ++c) {
      EXPECT_EQ(std::isnan(a.bands[c].lower[i]), std::isnan(b.bands[c].lower[i]));
      if (!std::isnan(a.bands[c].lower[i])) {
        EXPECT_EQ(a.bands[c].lower[i], b.bands[c].lower[i]);
        EXPECT_EQ(a.bands[c].upper[i], b.bands[c].upper[i]);
      }
    }
    EXPECT_EQ(a.successes[i], b.successes[i]);
  }
}

TEST_F(Bootstrap, SeparatedGroupsExcludeZero)
{
  // slower decay in group 1 keeps its median trajectory above group 2's
  auto slow = true_xz(300, 40, {0.3, 0.5});
  auto fast = true_xz(300, 41, {0.4, 0.6});
  BootstrapSettings bs;
  bs.replicates = 100;
  bs.coverages = {0.9};
  bs.seed = 3;
  bs.threads = 0;
  auto r = bootstrap_difference_bands(slow, fast, options, 0.5, 0.4, spec, bs);
  const auto last = r.s.size() - 1;
  ASSERT_FALSE(r.undefined[last]);
  EXPECT_GT(r.point[last], 0.0);
  EXPECT_GT(r.bands[0].lower[last], 0.0);
}
