#pragma once

#include "cond_dist.hpp"
#include "error.hpp"
#include "integrate.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "snippet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qtraj {

//! Longitudinal alpha-quantile trajectory from x0: integrates the inverted
//! conditional c.d.f.
inline TrajectorySolution quantile_trajectory(const ConditionalCdf& cdf, double alpha, double x0,
                                              const IntegratorSpec& spec,
                                              InversionSettings settings = {})
{
  auto sol = integrate(invert_to_quantile(cdf, alpha, settings), x0, spec);
  sol.alpha = alpha;
  return sol;
}

//! Conditional-mean trajectory from x0.
inline TrajectorySolution mean_trajectory(const SnippetDataset& dataset, const KernelSpec& kernel,
                                          double x0, const IntegratorSpec& spec)
{
  return integrate(conditional_mean(dataset, kernel), x0, spec);
}

struct SlopeFieldPoint
{
  double level = 0.0;
  std::optional<double> slope; //!< nullopt where the gradient is undefined
  std::string error;
};

//! Evaluates xi_alpha on a level grid; failures are recorded per point.
inline std::vector<SlopeFieldPoint> slope_field(const ConditionalCdf& cdf, double alpha,
                                                std::span<const double> levels)
{
  const auto gradient = invert_to_quantile(cdf, alpha);
  std::vector<SlopeFieldPoint> out;
  out.reserve(levels.size());
  for (double x : levels) {
    SlopeFieldPoint p;
    p.level = x;
    try {
      p.slope = gradient(x);
    } catch (const Error& e) {
      p.error = e.what();
    }
    out.push_back(std::move(p));
  }
  return out;
}

//! Bounds applied to estimated alpha* before it drives a schedule.
inline constexpr double alpha_star_floor = 0.01;
inline constexpr double alpha_star_ceiling = 0.99;

//! Quantile level on which a subject currently travels: F(slope | last level),
//! clamped to [0.01, 0.99].
inline double estimate_alpha_star(const LevelSlopePair& subject, const ConditionalCdf& cdf)
{
  if (!cdf.level_support().contains(subject.last_level))
    throw DomainError("subject '" + subject.subject_id + "': last level " +
                      csv::format(subject.last_level) + " outside estimator support [" +
                      csv::format(cdf.level_support().lo) + ", " +
                      csv::format(cdf.level_support().hi) + "]");
  const double f = cdf.evaluate(subject.last_level, subject.slope);
  return std::clamp(f, alpha_star_floor, alpha_star_ceiling);
}

//! Linear ramp of the quantile level from alpha* at s = 0 to the target level
//! at s = S*, constant afterwards.
struct PredictionSchedule
{
  double alpha_star = 0.5;
  double target_alpha = 0.5;
  double adherence = 1.0; //!< S*

  void validate() const
  {
    if (!(alpha_star > 0.0 && alpha_star < 1.0) || !(target_alpha > 0.0 && target_alpha < 1.0))
      throw ValidationError("schedule quantile levels must lie in (0, 1)");
    if (!(std::isfinite(adherence) && adherence > 0.0))
      throw ValidationError("adherence horizon S* must be positive");
  }

  double at(double s) const
  {
    if (s >= adherence)
      return target_alpha;
    return alpha_star + (target_alpha - alpha_star) * s / adherence;
  }
};

inline double alpha_schedule(const PredictionSchedule& schedule, double s)
{
  if (!(s >= 0.0))
    throw ValidationError("schedule time must be nonnegative");
  return schedule.at(s);
}

//! Integrates dz/ds = xi_{alpha(s)}(z) from the subject's last level,
//! re-inverting the c.d.f. at the current alpha(s) in every stage.
inline TrajectorySolution prediction_trajectory(const ConditionalCdf& cdf, double x0,
                                                const PredictionSchedule& schedule,
                                                const IntegratorSpec& spec,
                                                InversionSettings settings = {})
{
  schedule.validate();
  auto field = [&](double s, double z) { return cdf.quantile(z, schedule.at(s), settings); };
  auto sol = integrate_field(field, cdf.level_support(), x0, spec);
  sol.alpha = schedule.target_alpha;
  return sol;
}

struct Prediction
{
  PredictionSchedule schedule;
  TrajectorySolution trajectory;
};

//! Prediction for one subject: alpha* from its slope at the last level and
//! S* = half the snippet's time span.
inline Prediction prediction_trajectory(const ConditionalCdf& cdf, const LevelSlopePair& subject,
                                        double target_alpha, const IntegratorSpec& spec,
                                        InversionSettings settings = {})
{
  PredictionSchedule schedule;
  schedule.alpha_star = estimate_alpha_star(subject, cdf);
  schedule.target_alpha = target_alpha;
  schedule.adherence = 0.5 * subject.time_span;
  return {schedule, prediction_trajectory(cdf, subject.last_level, schedule, spec, settings)};
}

//! Pointwise percentile band at one coverage level.
struct Band
{
  double coverage = 0.9;
  std::vector<double> lower; //!< NaN where undefined
  std::vector<double> upper;
};

//! Group difference trajectory(group 1) - trajectory(group 2) with pointwise
//! bootstrap percentile bands.
struct BandResult
{
  double alpha = 0.5;
  double x0 = 0.0;
  IntegratorSpec spec;
  std::uint64_t seed = 0;
  std::size_t replicates = 0;
  std::vector<double> s;
  std::vector<double> point;          //!< NaN where either group's fit was truncated
  std::vector<Band> bands;
  std::vector<std::size_t> successes; //!< replicates defined at each s
  std::vector<bool> undefined;        //!< more than half of replicates failed at s

  bool any_undefined() const
  {
    return std::any_of(undefined.begin(), undefined.end(), [](bool b) { return b; });
  }
};

//! Type-7 (linear interpolation) sample quantile of sorted data.
inline double percentile_sorted(std::span<const double> sorted, double p)
{
  if (sorted.empty())
    return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct BootstrapSettings
{
  std::size_t replicates = 200;
  std::vector<double> coverages = {0.90, 0.95};
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

namespace detail {

inline SnippetDataset resample_subjects(const SnippetDataset& dataset, Rng& rng)
{
  std::vector<LevelSlopePair> pairs;
  pairs.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i)
    pairs.push_back(dataset.pairs()[rng.below(dataset.size())]);
  return build_dataset(std::move(pairs));
}

inline std::vector<double> trajectory_on_grid(const TrajectorySolution& sol, std::size_t points)
{
  std::vector<double> v(points, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < sol.values.size() && i < points; ++i)
    v[i] = sol.values[i];
  return v;
}

} // namespace detail

//! Resamples subjects with replacement within each group, refits with the
//! bandwidths resolved on the original groups and re-integrates. Replicate b
//! draws from the stream derive_seed(seed, b), so results do not depend on
//! the number of threads.
inline BandResult bootstrap_difference_bands(const SnippetDataset& group1,
                                             const SnippetDataset& group2,
                                             const CdfOptions& options, double alpha, double x0,
                                             const IntegratorSpec& spec,
                                             const BootstrapSettings& settings)
{
  spec.validate();
  if (settings.replicates < 100)
    throw ValidationError("bootstrap needs at least 100 replicates");
  for (double c : settings.coverages)
    if (!(c > 0.0 && c < 1.0))
      throw ValidationError("band coverage must lie in (0, 1)");

  const auto options1 = options.resolved(group1);
  const auto options2 = options.resolved(group2);
  const auto grid = spec.grid();
  const std::size_t points = grid.size();

  BandResult result;
  result.alpha = alpha;
  result.x0 = x0;
  result.spec = spec;
  result.seed = settings.seed;
  result.replicates = settings.replicates;
  result.s = grid;

  auto difference = [&](const SnippetDataset& a, const SnippetDataset& b) {
    const auto ta = quantile_trajectory(fit_cdf(a, options1), alpha, x0, spec);
    const auto tb = quantile_trajectory(fit_cdf(b, options2), alpha, x0, spec);
    auto va = detail::trajectory_on_grid(ta, points);
    auto vb = detail::trajectory_on_grid(tb, points);
    for (std::size_t i = 0; i < points; ++i)
      va[i] -= vb[i];
    return va;
  };

  result.point = difference(group1, group2);

  std::vector<std::vector<double>> replicate_diffs(settings.replicates);
  parallel_for(settings.replicates, settings.threads, [&](std::size_t b) {
    Rng rng(derive_seed(settings.seed, b));
    try {
      auto r1 = detail::resample_subjects(group1, rng);
      auto r2 = detail::resample_subjects(group2, rng);
      replicate_diffs[b] = difference(r1, r2);
    } catch (const Error&) {
      replicate_diffs[b].assign(points, std::numeric_limits<double>::quiet_NaN());
    }
  });

  result.successes.assign(points, 0);
  result.undefined.assign(points, false);
  for (double c : settings.coverages)
    result.bands.push_back({c, std::vector<double>(points), std::vector<double>(points)});

  std::vector<double> column;
  for (std::size_t i = 0; i < points; ++i) {
    column.clear();
    for (const auto& d : replicate_diffs)
      if (std::isfinite(d[i]))
        column.push_back(d[i]);
    result.successes[i] = column.size();
    result.undefined[i] = 2 * column.size() < settings.replicates;
    std::sort(column.begin(), column.end());
    for (auto& band : result.bands) {
      if (result.undefined[i]) {
        band.lower[i] = band.upper[i] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const double tail = 0.5 * (1.0 - band.coverage);
      band.lower[i] = percentile_sorted(column, tail);
      band.upper[i] = percentile_sorted(column, 1.0 - tail);
    }
  }
  return result;
}

} // namespace qtraj
