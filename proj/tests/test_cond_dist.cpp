#include <qtraj/cond_dist.hpp>
#include <qtraj/random.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace qtraj;

namespace {

SnippetDataset dataset(std::initializer_list<std::pair<double, double>> xz)
{
  std::vector<LevelSlopePair> pairs;
  int i = 0;
  for (auto [x, z] : xz) {
    LevelSlopePair p;
    p.subject_id = "p" + std::to_string(i++);
    p.level = x;
    p.slope = z;
    p.n_obs = 2;
    p.time_span = 1;
    p.last_level = x;
    pairs.push_back(p);
  }
  return build_dataset(std::move(pairs));
}

SnippetDataset random_dataset(Rng& rng, std::size_t n)
{
  std::vector<LevelSlopePair> pairs(n);
  for (std::size_t i = 0; i < n; ++i) {
    pairs[i].subject_id = std::to_string(i);
    pairs[i].level = rng.uniform(0, 1);
    // slopes on a coarse lattice so ties occur
    pairs[i].slope = std::round(rng.uniform(-2, 2) * 8) / 8 - pairs[i].level;
    pairs[i].n_obs = 3;
    pairs[i].time_span = 1;
    pairs[i].last_level = pairs[i].level;
  }
  return build_dataset(std::move(pairs));
}

// Brute-force inf{z : F(z) >= alpha} over equally weighted atoms.
double ecdf_quantile_brute(std::vector<double> atoms, double alpha)
{
  std::sort(atoms.begin(), atoms.end());
  for (double z : atoms) {
    double count = 0;
    for (double a : atoms) count += a <= z ? 1 : 0;
    if (count / static_cast<double>(atoms.size()) >= alpha)
      return z;
  }
  return atoms.back();
}

double std_normal_cdf(double u) { return 0.5 * std::erfc(-u / std::sqrt(2.0)); }

const KernelSpec gauss{KernelKind::gaussian, 1.0, 1.0};

} // namespace

TEST(Binned, CountsSlopesInBin)
{
  auto ds = dataset({{1, 0}, {1, 2}});
  auto cdf = fit_binned(ds, 0.5);
  EXPECT_DOUBLE_EQ(cdf.evaluate(1, 1), 0.5);
  EXPECT_DOUBLE_EQ(cdf.evaluate(1, 5), 1.0);
}

TEST(Binned, EmptyBinFailsNamingQuery)
{
  auto cdf = fit_binned(dataset({{1, 0}, {1, 2}}), 0.5);
  try {
    cdf.evaluate(9, 0);
    FAIL();
  } catch (const InsufficientDataError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("x = 9"), std::string::npos);
    EXPECT_NE(msg.find("h = 0.5"), std::string::npos);
  }
}

TEST(Binned, RejectsNonPositiveWidth)
{
  EXPECT_THROW(fit_binned(dataset({{1, 0}, {1, 2}}), 0.0), ValidationError);
}

TEST(Kernel, DegenerateSlopes)
{
  auto cdf = fit_kernel(dataset({{0.1, 3}, {0.5, 3}, {0.9, 3}}), {KernelKind::gaussian, 0.2, 1});
  EXPECT_DOUBLE_EQ(cdf.evaluate(0.4, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(cdf.evaluate(0.4, 2.999), 0.0);
}

TEST(Kernel, SingleAtom)
{
  // second pair is far outside the Gaussian window of x = 0
  auto cdf = fit_kernel(dataset({{0, 0}, {100, 5}}), gauss);
  EXPECT_DOUBLE_EQ(cdf.evaluate(0, -0.1), 0.0);
  EXPECT_DOUBLE_EQ(cdf.evaluate(0, 0), 1.0);
}

TEST(Kernel, FailsWithoutLocalMass)
{
  auto cdf = fit_kernel(dataset({{0, 0}, {0.1, 1}}), {KernelKind::epanechnikov, 0.2, 1});
  EXPECT_THROW(cdf.evaluate(5, 0), InsufficientDataError);
}

TEST(JointKernel, SingleAtomAtCentre)
{
  auto cdf = fit_joint_kernel(dataset({{0, 0}, {100, 5}}), gauss);
  EXPECT_DOUBLE_EQ(cdf.evaluate(0, 0), 0.5);
}

TEST(JointKernel, SymmetricPairBruteForce)
{
  const double h = 0.01;
  auto cdf = fit_joint_kernel(dataset({{0, -1}, {0, 1}}), {KernelKind::gaussian, 1.0, h});
  const double brute = 0.5 * (std_normal_cdf((0 - (-1)) / h) + std_normal_cdf((0 - 1) / h));
  EXPECT_NEAR(cdf.evaluate(0, 0), brute, 1e-15);
  EXPECT_NEAR(cdf.evaluate(0, 0), 0.5, 1e-6);
}

TEST(JointKernel, MatchesFullSumFormula)
{
  Rng rng(3);
  auto ds = random_dataset(rng, 200);
  const KernelSpec k{KernelKind::gaussian, 0.07, 0.05};
  auto cdf = fit_joint_kernel(ds, k);
  for (int probe = 0; probe < 200; ++probe) {
    const double x = rng.uniform(0.05, 0.95), z = rng.uniform(-3, 2);
    double num = 0, den = 0;
    for (const auto& p : ds.pairs()) {
      const double w = std::exp(-0.5 * std::pow((x - p.level) / k.h_k, 2));
      num += w * std_normal_cdf((z - p.slope) / k.h_h);
      den += w;
    }
    EXPECT_NEAR(cdf.evaluate(x, z), num / den, 1e-13);
  }
}

TEST(JointKernel, ApproachesIndicatorAsSlopeBandwidthShrinks)
{
  Rng rng(4);
  auto ds = random_dataset(rng, 100);
  auto step = fit_kernel(ds, {KernelKind::gaussian, 0.1, 1});
  for (double hh : {1e-7, 1e-9, 1e-12}) {
    auto smooth = fit_joint_kernel(ds, {KernelKind::gaussian, 0.1, hh});
    for (double z : {-1.03, -0.51, 0.27})
      EXPECT_NEAR(smooth.evaluate(0.5, z), step.evaluate(0.5, z), 1e-9) << hh;
  }
}

TEST(Quantile, DegenerateDistribution)
{
  auto ds = dataset({{0.2, -0.7}, {0.5, -0.7}, {0.8, -0.7}});
  for (auto cdf : {fit_binned(ds, 0.4), fit_kernel(ds, {KernelKind::gaussian, 0.2, 1})}) {
    for (double alpha : {0.01, 0.3, 0.5, 0.99})
      for (double x : {0.2, 0.5, 0.8})
        EXPECT_DOUBLE_EQ(cdf.quantile(x, alpha), -0.7);
  }
}

TEST(Quantile, FourAtomMedianMatchesBruteForce)
{
  auto ds = dataset({{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  auto cdf = fit_kernel(ds, gauss);
  const double brute = ecdf_quantile_brute({1, 2, 3, 4}, 0.5);
  ASSERT_EQ(brute, 2.0);
  EXPECT_EQ(cdf.quantile(0, 0.5), brute);
  for (double alpha : {0.1, 0.25, 0.26, 0.75, 0.76, 0.99})
    EXPECT_EQ(cdf.quantile(0, alpha), ecdf_quantile_brute({1, 2, 3, 4}, alpha)) << alpha;
}

TEST(Quantile, JointKernelFixedPoint)
{
  Rng rng(5);
  auto ds = random_dataset(rng, 300);
  for (double hh : {0.3, 0.01, 0.001}) {
    auto cdf = fit_joint_kernel(ds, {KernelKind::gaussian, 0.08, hh});
    for (int probe = 0; probe < 50; ++probe) {
      const double x = rng.uniform(0.05, 0.95), alpha = rng.uniform(0.02, 0.98);
      EXPECT_NEAR(cdf.evaluate(x, cdf.quantile(x, alpha)), alpha, 1e-6);
    }
  }
}

TEST(Quantile, RejectsAlphaOutsideUnitInterval)
{
  auto cdf = fit_kernel(dataset({{0, 1}, {0, 2}}), gauss);
  EXPECT_THROW(cdf.quantile(0, 0.0), ValidationError);
  EXPECT_THROW(cdf.quantile(0, 1.0), ValidationError);
  EXPECT_THROW(invert_to_quantile(cdf, 1.5), ValidationError);
}

TEST(Quantile, GradientRespectsDomain)
{
  auto cdf = fit_kernel(dataset({{0, 1}, {1, 2}}), gauss);
  auto g = invert_to_quantile(cdf, 0.5);
  EXPECT_EQ(g.domain(), (Interval{0, 1}));
  EXPECT_THROW(g(1.5), DomainError);
  EXPECT_NO_THROW(g(0.5));
}

TEST(Quantile, InversionFailsWhenBracketCannotExpand)
{
  // a logistic c.d.f. cannot reach an extreme level inside the initial
  // bracket, and no doublings are allowed
  std::vector<LevelSlopePair> pairs;
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    LevelSlopePair p;
    p.subject_id = std::to_string(i);
    p.level = rng.uniform(0, 1);
    p.slope = rng.normal();
    p.n_obs = 2;
    p.time_span = 1;
    pairs.push_back(p);
  }
  auto cdf = fit_logistic(build_dataset(pairs));
  EXPECT_THROW(cdf.quantile(0.5, 1e-12, InversionSettings{1e-8, 0}), InversionError);
  const double z = cdf.quantile(0.5, 0.3);
  EXPECT_NEAR(cdf.evaluate(0.5, z), 0.3, 1e-6);
}

TEST(ConditionalMean, ConstantResponse)
{
  auto g = conditional_mean(dataset({{0.1, 2}, {0.4, 2}, {0.9, 2}}), {KernelKind::gaussian, 0.3, 1});
  EXPECT_DOUBLE_EQ(g(0.5), 2.0);
}

TEST(ConditionalMean, SymmetricAverage)
{
  auto g = conditional_mean(dataset({{0, -1}, {0, 1}}), gauss);
  EXPECT_DOUBLE_EQ(g(0), 0.0);
}

TEST(ConditionalMean, RecoversGeneratingLine)
{
  std::vector<LevelSlopePair> pairs;
  for (int i = 0; i <= 900; ++i) {
    LevelSlopePair p;
    p.subject_id = std::to_string(i);
    p.level = 0.1 + 0.001 * i;
    p.slope = -p.level;
    p.n_obs = 2;
    p.time_span = 1;
    pairs.push_back(p);
  }
  auto g = conditional_mean(build_dataset(pairs), {KernelKind::gaussian, 0.01, 1});
  EXPECT_NEAR(g(0.5), -0.5, 0.02);
}

// Property suite over random datasets and queries.
TEST(CdfProperties, BoundedAndMonotoneInSlope)
{
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto ds = random_dataset(rng, 80);
    const KernelSpec k{trial % 2 ? KernelKind::gaussian : KernelKind::epanechnikov, 0.15, 0.2};
    const ConditionalCdf cdfs[] = {fit_binned(ds, 0.15), fit_kernel(ds, k),
                                   fit_joint_kernel(ds, k), fit_logistic(ds)};
    for (const auto& cdf : cdfs) {
      for (int probe = 0; probe < 25; ++probe) {
        const double x = rng.uniform(0.1, 0.9);
        double z1 = rng.uniform(-4, 3), z2 = rng.uniform(-4, 3);
        if (z1 > z2) std::swap(z1, z2);
        const double f1 = cdf.evaluate(x, z1), f2 = cdf.evaluate(x, z2);
        EXPECT_GE(f1, 0.0);
        EXPECT_LE(f2, 1.0);
        EXPECT_LE(f1, f2);
      }
    }
  }
}

TEST(CdfProperties, BinnedEqualsUniformKernel)
{
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    auto ds = random_dataset(rng, 60);
    const double h = rng.uniform(0.05, 0.3);
    auto binned = fit_binned(ds, h);
    auto uniform = fit_kernel(ds, {KernelKind::uniform, h, 1});
    for (int probe = 0; probe < 50; ++probe) {
      const double x = rng.uniform(0, 1), z = rng.uniform(-3, 2);
      double fb = std::numeric_limits<double>::quiet_NaN();
      double fu = fb;
      try {
        fb = binned.evaluate(x, z);
      } catch (const InsufficientDataError&) {
      }
      try {
        fu = uniform.evaluate(x, z);
      } catch (const InsufficientDataError&) {
      }
      EXPECT_EQ(std::isnan(fb), std::isnan(fu));
      if (!std::isnan(fb)) {
        EXPECT_EQ(fb, fu);
      }
    }
  }
}

TEST(CdfProperties, QuantilesMonotoneInAlphaAndShiftEquivariant)
{
  Rng rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    auto ds = random_dataset(rng, 120);
    const double c = rng.uniform(-3, 3);
    std::vector<LevelSlopePair> shifted_pairs = ds.pairs();
    for (auto& p : shifted_pairs) p.slope += c;
    auto shifted = build_dataset(shifted_pairs);
    const KernelSpec k{KernelKind::gaussian, 0.1, 0.05};
    const std::pair<ConditionalCdf, ConditionalCdf> fits[] = {
      {fit_binned(ds, 0.1), fit_binned(shifted, 0.1)},
      {fit_kernel(ds, k), fit_kernel(shifted, k)},
      {fit_joint_kernel(ds, k), fit_joint_kernel(shifted, k)}};
    for (const auto& [cdf, cdf_shift] : fits) {
      for (int probe = 0; probe < 20; ++probe) {
        const double x = rng.uniform(0.1, 0.9);
        double a1 = rng.uniform(0.05, 0.95), a2 = rng.uniform(0.05, 0.95);
        if (a1 > a2) std::swap(a1, a2);
        EXPECT_LE(cdf.quantile(x, a1), cdf.quantile(x, a2));
        EXPECT_NEAR(cdf_shift.quantile(x, a1), cdf.quantile(x, a1) + c, 1e-9);
      }
    }
  }
}

TEST(Silverman, MatchesRuleOfThumb)
{
  std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  // sd = 3.02765, IQR (type 7) = 4.5 -> min(3.02765, 3.35821)
  const double expected = 0.9 * std::sqrt(55.0 / 6.0) * std::pow(10.0, -0.2);
  EXPECT_NEAR(silverman_bandwidth(v), expected, 1e-12);
  std::vector<double> flat{2, 2, 2};
  EXPECT_THROW(silverman_bandwidth(flat), InsufficientDataError);
}

TEST(FitCdf, ResolvesDefaultBandwidths)
{
  Rng rng(10);
  auto ds = random_dataset(rng, 50);
  CdfOptions opts;
  auto r = opts.resolved(ds);
  ASSERT_TRUE(r.h_k && r.h_h);
  EXPECT_GT(*r.h_k, 0);
  EXPECT_GT(*r.h_h, 0);
  auto cdf = fit_cdf(ds, opts);
  EXPECT_EQ(cdf.method(), CdfMethod::joint_kernel);
  EXPECT_DOUBLE_EQ(cdf.kernel()->h_k, *r.h_k);
}

TEST(Diagnostics, GridMarksMissingCells)
{
  auto cdf = fit_binned(dataset({{0, 0}, {0.1, 1}}), 0.2);
  std::vector<double> xs{0.05, 3.0}, zs{-1, 0.5, 2};
  auto grid = cdf_grid(cdf, xs, zs);
  ASSERT_EQ(grid.size(), 6u);
  EXPECT_DOUBLE_EQ(grid[1].F, 0.5);
  EXPECT_TRUE(std::isnan(grid[4].F));
}

TEST(Diagnostics, LevelDerivativeFiniteDifference)
{
  // logistic model has the closed-form derivative b1 * p (1 - p)
  Rng rng(14);
  auto ds = random_dataset(rng, 200);
  auto cdf = fit_logistic(ds);
  const auto& c = cdf.logistic();
  const double x = 0.4, z = -0.5;
  const double p = cdf.evaluate(x, z);
  EXPECT_NEAR(cdf.level_derivative(x, z), c.level_coef * p * (1 - p), 1e-6);
}
