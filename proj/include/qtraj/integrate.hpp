#pragma once

#include "error.hpp"
#include "snippet.hpp"

#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace qtraj {

enum class IntegratorMethod
{
  euler,
  rk4,
};

inline std::string_view to_string(IntegratorMethod m)
{
  return m == IntegratorMethod::euler ? "euler" : "rk4";
}

inline IntegratorMethod parse_integrator_method(std::string_view name)
{
  if (name == "euler") return IntegratorMethod::euler;
  if (name == "rk4") return IntegratorMethod::rk4;
  throw ValidationError("unknown integrator '" + std::string(name) + "'");
}

//! Fixed-step integration over (0, horizon]. A final shorter step lands
//! exactly on the horizon when it is not a multiple of the step.
struct IntegratorSpec
{
  IntegratorMethod method = IntegratorMethod::rk4;
  double step = 0.008;
  double horizon = 8.0;
  std::size_t max_steps = 10'000'000;

  //! Step defaults to horizon / 1000.
  static IntegratorSpec over(double horizon, IntegratorMethod method = IntegratorMethod::rk4)
  {
    return IntegratorSpec{method, horizon / 1000.0, horizon};
  }

  std::size_t step_count() const
  {
    const double ratio = horizon / step;
    auto m = static_cast<std::size_t>(std::ceil(ratio - 1e-9 * ratio));
    return m == 0 ? 1 : m;
  }

  void validate() const
  {
    if (!(std::isfinite(horizon) && horizon > 0.0))
      throw ValidationError("horizon must be positive and finite");
    if (!(std::isfinite(step) && step > 0.0))
      throw ValidationError("step must be positive and finite");
    if (step > horizon)
      throw ValidationError("step must not exceed the horizon");
    if (max_steps < step_count())
      throw ValidationError("max_steps is smaller than horizon / step");
  }

  //! s_i = i * step, with the last point equal to the horizon.
  std::vector<double> grid() const
  {
    const std::size_t m = step_count();
    std::vector<double> s(m + 1);
    for (std::size_t i = 0; i < m; ++i)
      s[i] = static_cast<double>(i) * step;
    s[m] = horizon;
    return s;
  }
};

enum class ExitReason
{
  completed,
  left_support,
  gradient_error,
};

inline std::string_view to_string(ExitReason r)
{
  switch (r) {
    case ExitReason::completed: return "completed";
    case ExitReason::left_support: return "left_support";
    case ExitReason::gradient_error: return "gradient_error";
  }
  return "?";
}

//! Discrete solution {(s_i, psi(s_i))} of an initial-value problem.
struct TrajectorySolution
{
  std::optional<double> alpha; //!< nullopt for the conditional-mean trajectory
  double x0 = 0.0;
  IntegratorSpec spec;
  std::vector<double> s;
  std::vector<double> values;
  std::optional<double> truncated_at;
  ExitReason exit_reason = ExitReason::completed;
  std::string message; //!< cause of truncation, if any

  bool complete() const { return exit_reason == ExitReason::completed; }

  //! Value at grid index i, or the last computed value when truncated earlier.
  double held_value(std::size_t i) const
  {
    return i < values.size() ? values[i] : values.back();
  }
};

//! A level-dependent gradient defined on a level interval.
template <class G>
concept LevelGradient = requires(const G& g, double x) {
  { g(x) } -> std::convertible_to<double>;
  { g.domain() } -> std::convertible_to<Interval>;
};

//! Wraps a plain function as a LevelGradient.
struct FunctionGradient
{
  std::function<double(double)> fn;
  Interval domain_ = {-std::numeric_limits<double>::infinity(),
                      std::numeric_limits<double>::infinity()};

  double operator()(double x) const { return fn(x); }
  Interval domain() const { return domain_; }
};

namespace detail {

struct LeftSupport
{
  double level;
};

} // namespace detail

//! Increment function Phi(z, delta) of a one-step rule applied to the field
//! f(s, z), starting at time s. Stage points outside `domain` raise
//! detail::LeftSupport.
template <class Field>
double increment(IntegratorMethod method, Field&& f, double s, double z, double delta,
                 const Interval& domain)
{
  auto eval = [&](double t, double y) {
    if (!domain.contains(y))
      throw detail::LeftSupport{y};
    return static_cast<double>(f(t, y));
  };
  if (method == IntegratorMethod::euler)
    return eval(s, z);
  const double k1 = eval(s, z);
  const double k2 = eval(s + 0.5 * delta, z + 0.5 * delta * k1);
  const double k3 = eval(s + 0.5 * delta, z + 0.5 * delta * k2);
  const double k4 = eval(s + delta, z + delta * k3);
  return (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
}

//! Autonomous form: Phi(z, delta, xi).
template <LevelGradient G>
double increment(IntegratorMethod method, const G& gradient, double z, double delta)
{
  return increment(
    method, [&](double, double y) { return gradient(y); }, 0.0, z, delta,
    Interval{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
}

//! Integrates dz/ds = f(s, z), z(0) = x0, on the grid of `spec`. Integration
//! stops, keeping the partial solution, when a stage or the next state leaves
//! `domain` (left_support) or the field throws or returns a non-finite value
//! (gradient_error).
template <class Field>
TrajectorySolution integrate_field(Field&& f, const Interval& domain, double x0,
                                   const IntegratorSpec& spec)
{
  spec.validate();
  if (!domain.contains(x0))
    throw DomainError("initial level " + csv::format(x0) + " outside gradient domain [" +
                      csv::format(domain.lo) + ", " + csv::format(domain.hi) + "]");

  TrajectorySolution sol;
  sol.x0 = x0;
  sol.spec = spec;
  const auto grid = spec.grid();
  sol.s.reserve(grid.size());
  sol.values.reserve(grid.size());
  sol.s.push_back(0.0);
  sol.values.push_back(x0);

  double z = x0;
  for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
    const double delta = grid[i + 1] - grid[i];
    double next = 0.0;
    try {
      next = z + delta * increment(spec.method, f, grid[i], z, delta, domain);
    } catch (const detail::LeftSupport& e) {
      sol.exit_reason = ExitReason::left_support;
      sol.message = "stage level " + csv::format(e.level) + " outside support";
    } catch (const DomainError& e) {
      sol.exit_reason = ExitReason::left_support;
      sol.message = e.what();
    } catch (const Error& e) {
      sol.exit_reason = ExitReason::gradient_error;
      sol.message = e.what();
    }
    if (sol.exit_reason == ExitReason::completed) {
      if (!std::isfinite(next)) {
        sol.exit_reason = ExitReason::gradient_error;
        sol.message = "non-finite state";
      } else if (!domain.contains(next)) {
        sol.exit_reason = ExitReason::left_support;
        sol.message = "next level " + csv::format(next) + " outside support";
      }
    }
    if (sol.exit_reason != ExitReason::completed) {
      sol.truncated_at = grid[i];
      return sol;
    }
    z = next;
    sol.s.push_back(grid[i + 1]);
    sol.values.push_back(z);
  }
  return sol;
}

//! Solves the autonomous problem dz/ds = gradient(z), z(0) = x0.
template <LevelGradient G>
TrajectorySolution integrate(const G& gradient, double x0, const IntegratorSpec& spec)
{
  return integrate_field([&](double, double y) { return gradient(y); }, gradient.domain(), x0,
                         spec);
}

//! Local discretization error Delta - Phi at (s, z(s)) for a known exact
//! solution: [z(s + delta) - z(s)] / delta minus the rule's increment.
template <class Exact, LevelGradient G>
double local_discretization_error(IntegratorMethod method, Exact&& exact, const G& gradient,
                                  double s, double delta)
{
  const double z = exact(s);
  const double forward = (exact(s + delta) - z) / delta;
  return forward - increment(method, gradient, z, delta);
}

} // namespace qtraj
