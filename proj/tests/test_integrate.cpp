#include <qtraj/integrate.hpp>

#include <gtest/gtest.h>

#include <cmath>

using namespace qtraj;

namespace {

const FunctionGradient decay{[](double z) { return -z; }};

double endpoint(IntegratorMethod m, double step)
{
  auto sol = integrate(decay, 1.0, IntegratorSpec{m, step, 1.0});
  EXPECT_TRUE(sol.complete());
  return sol.values.back();
}

// Least-squares slope of log|y| on log x.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y)
{
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(std::abs(y[i]));
  }
  mx /= x.size();
  my /= x.size();
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(std::abs(y[i])) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

} // namespace

TEST(Integrate, ConstantGradientIsExact)
{
  const FunctionGradient constant{[](double) { return 2.0; }};
  for (auto m : {IntegratorMethod::euler, IntegratorMethod::rk4}) {
    auto sol = integrate(constant, 1.0, IntegratorSpec{m, 0.25, 3.0});
    ASSERT_EQ(sol.values.size(), 13u);
    for (std::size_t i = 0; i < sol.values.size(); ++i)
      EXPECT_NEAR(sol.values[i], 1.0 + 2.0 * sol.s[i], 1e-12);
  }
}

TEST(Integrate, Rk4MatchesExponential)
{
  EXPECT_NEAR(endpoint(IntegratorMethod::rk4, 0.1), std::exp(-1.0), 1e-6);
  EXPECT_NEAR(endpoint(IntegratorMethod::rk4, 0.1), 0.3678794, 1e-6);
}

TEST(Integrate, EulerIsGeometric)
{
  EXPECT_NEAR(endpoint(IntegratorMethod::euler, 0.1), std::pow(0.9, 10), 1e-9);
}

TEST(Integrate, GlobalErrorOrders)
{
  const double e = std::exp(-1.0);
  const double euler = std::abs(endpoint(IntegratorMethod::euler, 0.1) - e) /
                       std::abs(endpoint(IntegratorMethod::euler, 0.05) - e);
  const double rk4 = std::abs(endpoint(IntegratorMethod::rk4, 0.1) - e) /
                     std::abs(endpoint(IntegratorMethod::rk4, 0.05) - e);
  EXPECT_GE(euler, 1.8);
  EXPECT_LE(euler, 2.2);
  EXPECT_GE(rk4, 12.0);
  EXPECT_LE(rk4, 20.0);
}

TEST(Integrate, LocalDiscretizationErrorOrders)
{
  auto exact = [](double s) { return std::exp(-s); };
  std::vector<double> deltas{0.2, 0.1, 0.05, 0.025};
  std::vector<double> euler, rk4;
  for (double d : deltas) {
    euler.push_back(local_discretization_error(IntegratorMethod::euler, exact, decay, 0.3, d));
    rk4.push_back(local_discretization_error(IntegratorMethod::rk4, exact, decay, 0.3, d));
  }
  EXPECT_NEAR(loglog_slope(deltas, euler), 1.0, 0.3);
  EXPECT_NEAR(loglog_slope(deltas, rk4), 4.0, 0.3);
}

TEST(Integrate, GridEndsAtHorizon)
{
  IntegratorSpec spec{IntegratorMethod::rk4, 0.3, 1.0};
  auto g = spec.grid();
  ASSERT_EQ(g.size(), 5u);
  EXPECT_DOUBLE_EQ(g.back(), 1.0);
  EXPECT_EQ(IntegratorSpec::over(8.0).step_count(), 1000u);
}

TEST(Integrate, RejectsBadSpec)
{
  EXPECT_THROW((IntegratorSpec{IntegratorMethod::rk4, 0.0, 1.0}.validate()), ValidationError);
  EXPECT_THROW((IntegratorSpec{IntegratorMethod::rk4, 2.0, 1.0}.validate()), ValidationError);
  EXPECT_THROW((IntegratorSpec{IntegratorMethod::rk4, 0.1, -1.0}.validate()), ValidationError);
  EXPECT_THROW(parse_integrator_method("midpoint"), ValidationError);
}

TEST(Integrate, TruncatesOnLeavingDomain)
{
  const FunctionGradient bounded{[](double z) { return -z; }, Interval{0.5, 2.0}};
  auto sol = integrate(bounded, 1.0, IntegratorSpec{IntegratorMethod::euler, 0.1, 2.0});
  EXPECT_EQ(sol.exit_reason, ExitReason::left_support);
  ASSERT_TRUE(sol.truncated_at.has_value());
  // 0.9^k >= 0.5 for k <= 6
  EXPECT_EQ(sol.values.size(), 7u);
  EXPECT_NEAR(*sol.truncated_at, 0.6, 1e-12);
  EXPECT_DOUBLE_EQ(sol.held_value(15), sol.values.back());
}

TEST(Integrate, GradientFailureIsRecorded)
{
  const FunctionGradient failing{[](double z) -> double {
    if (z < 0.8) throw InsufficientDataError("no data");
    return -z;
  }};
  auto sol = integrate(failing, 1.0, IntegratorSpec{IntegratorMethod::euler, 0.1, 1.0});
  EXPECT_EQ(sol.exit_reason, ExitReason::gradient_error);
  EXPECT_EQ(sol.message, "no data");
}

TEST(Integrate, InitialLevelOutsideDomainIsAnError)
{
  const FunctionGradient bounded{[](double z) { return -z; }, Interval{0.5, 2.0}};
  EXPECT_THROW(integrate(bounded, 3.0, IntegratorSpec{}), DomainError);
}
