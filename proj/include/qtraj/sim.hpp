#pragma once

#include "cond_dist.hpp"
#include "dynamics.hpp"
#include "error.hpp"
#include "integrate.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "snippet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

//! Exponential-decline simulation Y(t) = exp(-b (t + 1)), b ~ U(b_range):
//! snippet generation, Monte Carlo ground truth and the AISE benchmark.
namespace qtraj::sim {

enum class NoiseScenario
{
  true_xz,   //!< level and slope observed exactly at the window centre
  noiseless, //!< in-window samples without error, reduced by OLS
  gaussian,  //!< in-window samples plus N(0, sigma^2) error
};

struct NoiseSetting
{
  NoiseScenario scenario = NoiseScenario::true_xz;
  double sigma = 0.0;

  std::string label() const
  {
    switch (scenario) {
      case NoiseScenario::true_xz: return "true-xz";
      case NoiseScenario::noiseless: return "noiseless";
      case NoiseScenario::gaussian: return "sigma=" + csv::format(sigma);
    }
    return "?";
  }

  void validate() const
  {
    if (!(std::isfinite(sigma) && sigma >= 0.0))
      throw ValidationError("noise sigma must be finite and nonnegative");
    if (scenario == NoiseScenario::gaussian && !(sigma > 0.0))
      throw ValidationError("gaussian noise scenario needs sigma > 0");
  }

  friend bool operator==(const NoiseSetting&, const NoiseSetting&) = default;
};

//! Parses "true-xz", "noiseless" or a positive sigma value.
inline NoiseSetting parse_noise_setting(std::string_view text)
{
  if (text == "true-xz" || text == "true_xz")
    return {NoiseScenario::true_xz, 0.0};
  if (text == "noiseless")
    return {NoiseScenario::noiseless, 0.0};
  if (text.starts_with("sigma="))
    text.remove_prefix(6);
  auto sigma = csv::parse_double(text);
  if (!sigma)
    throw ValidationError("unknown noise scenario '" + std::string(text) + "'");
  NoiseSetting s{NoiseScenario::gaussian, *sigma};
  s.validate();
  return s;
}

struct SimulationConfig
{
  std::size_t n = 300;
  Interval b_range = {0.3, 0.5};
  Interval t_domain = {0.0, 10.0};
  Interval center_range = {0.5, 9.5}; //!< range of the window centres T_i
  double half_width = 0.5;            //!< window half-width Delta
  std::vector<int> obs_choices = {3, 4, 5};
  NoiseSetting noise;
  std::uint64_t seed = 1;

  void validate() const
  {
    noise.validate();
    if (n < 2)
      throw ValidationError("simulation needs at least 2 subjects");
    if (!(b_range.lo > 0.0 && b_range.hi >= b_range.lo))
      throw ValidationError("decay-rate range must be positive and ordered");
    if (!(half_width > 0.0))
      throw ValidationError("window half-width must be positive");
    if (!(center_range.hi >= center_range.lo) ||
        center_range.lo - half_width < t_domain.lo ||
        center_range.hi + half_width > t_domain.hi)
      throw ValidationError("observation windows must lie inside the time domain");
    if (obs_choices.empty() ||
        std::any_of(obs_choices.begin(), obs_choices.end(), [](int k) { return k < 2; }))
      throw ValidationError("observation counts must be at least 2");
  }
};

inline double level_at(double b, double t) { return std::exp(-b * (t + 1.0)); }

//! Generated data plus the latent draws that produced them.
struct SimulatedData
{
  SnippetDataset dataset;
  std::vector<Snippet> snippets; //!< empty for the true_xz scenario
  std::vector<double> rates;     //!< b_i
  std::vector<double> centers;   //!< T_i
};

//! Draws per subject, in this order and for every scenario: b, T, N, N
//! window times, N standard normal errors. Scenarios and sample sizes that
//! share a seed therefore share their first subjects' draws.
inline SimulatedData generate_snippets(const SimulationConfig& config)
{
  config.validate();
  Rng rng(config.seed);
  std::vector<LevelSlopePair> pairs;
  std::vector<Exclusion> exclusions;
  std::vector<Snippet> snippets;
  std::vector<double> rates, centers;
  pairs.reserve(config.n);
  rates.reserve(config.n);
  centers.reserve(config.n);

  char id[32];
  for (std::size_t i = 0; i < config.n; ++i) {
    const double b = rng.uniform(config.b_range.lo, config.b_range.hi);
    const double t = rng.uniform(config.center_range.lo, config.center_range.hi);
    const int count = config.obs_choices[rng.below(config.obs_choices.size())];
    std::vector<double> times(count), errors(count);
    for (auto& tj : times)
      tj = rng.uniform(t - config.half_width, t + config.half_width);
    for (auto& e : errors)
      e = rng.normal();
    rates.push_back(b);
    centers.push_back(t);
    std::snprintf(id, sizeof(id), "s%06zu", i + 1);

    if (config.noise.scenario == NoiseScenario::true_xz) {
      LevelSlopePair p;
      p.subject_id = id;
      p.level = level_at(b, t);
      p.slope = -b * p.level;
      p.n_obs = static_cast<std::size_t>(count);
      p.time_span = 2.0 * config.half_width;
      p.last_level = p.level;
      pairs.push_back(std::move(p));
      continue;
    }

    const double sigma = config.noise.scenario == NoiseScenario::gaussian ? config.noise.sigma : 0.0;
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](auto a, auto c) { return times[a] < times[c]; });
    Snippet s;
    s.subject_id = id;
    for (auto j : order) {
      s.times.push_back(times[j]);
      s.values.push_back(level_at(b, times[j]) + sigma * errors[j]);
    }
    auto reduced = extract_level_slope(s);
    if (auto* p = std::get_if<LevelSlopePair>(&reduced))
      pairs.push_back(std::move(*p));
    else
      exclusions.push_back(std::get<Exclusion>(reduced));
    snippets.push_back(std::move(s));
  }
  return {build_dataset(std::move(pairs), std::move(exclusions)), std::move(snippets),
          std::move(rates), std::move(centers)};
}

//! Monte Carlo sample of exact (level, slope) pairs of the process observed
//! at a uniform random time, sorted by level.
struct OracleSample
{
  std::vector<double> levels;
  std::vector<double> slopes;
  std::size_t mc_size = 0;
  std::uint64_t seed = 0;

  OracleSample(const SimulationConfig& process, std::size_t size, std::uint64_t sample_seed)
    : mc_size(size)
    , seed(sample_seed)
  {
    Rng rng(sample_seed);
    std::vector<std::pair<double, double>> draws(size);
    for (auto& d : draws) {
      const double b = rng.uniform(process.b_range.lo, process.b_range.hi);
      const double t = rng.uniform(process.center_range.lo, process.center_range.hi);
      const double x = level_at(b, t);
      d = {x, -b * x};
    }
    std::sort(draws.begin(), draws.end());
    levels.reserve(size);
    slopes.reserve(size);
    for (const auto& [x, z] : draws) {
      levels.push_back(x);
      slopes.push_back(z);
    }
  }

  //! alpha-quantile, inf{z : F_n(z) >= alpha}, of the slopes with level in
  //! [x (1 - r), x (1 + r)].
  double bin_quantile(double x, double alpha, double relative_half_width) const
  {
    const double w = relative_half_width * x;
    auto lo = std::lower_bound(levels.begin(), levels.end(), x - w);
    auto hi = std::upper_bound(lo, levels.end(), x + w);
    std::vector<double> bin(slopes.begin() + (lo - levels.begin()),
                            slopes.begin() + (hi - levels.begin()));
    if (bin.size() < 50)
      throw InsufficientDataError("oracle bin at level " + csv::format(x) + " holds " +
                                  std::to_string(bin.size()) +
                                  " draws; increase the Monte Carlo size");
    const auto k = static_cast<std::size_t>(
      std::max(0.0, std::ceil(alpha * static_cast<double>(bin.size())) - 1.0));
    std::nth_element(bin.begin(), bin.begin() + static_cast<std::ptrdiff_t>(k), bin.end());
    return bin[k];
  }
};

//! True xi_alpha estimated by binned Monte Carlo quantiles on a log-spaced
//! level grid, linearly interpolated in log level.
class OracleGradient
{
public:
  static constexpr std::size_t default_grid_points = 400;
  static constexpr double default_relative_half_width = 0.01;

  OracleGradient(const OracleSample& sample, double alpha, Interval levels,
                 std::size_t grid_points = default_grid_points,
                 double relative_half_width = default_relative_half_width)
    : alpha_(alpha)
    , relative_half_width_(relative_half_width)
  {
    if (!(levels.lo > 0.0 && levels.hi > levels.lo) || grid_points < 2)
      throw ValidationError("oracle level grid must be positive and nondegenerate");
    const double a = std::log(levels.lo);
    const double b = std::log(levels.hi);
    for (std::size_t g = 0; g < grid_points; ++g) {
      const double u = a + (b - a) * static_cast<double>(g) / static_cast<double>(grid_points - 1);
      log_levels_.push_back(u);
      values_.push_back(sample.bin_quantile(std::exp(u), alpha, relative_half_width));
    }
    domain_ = levels;
  }

  double alpha() const { return alpha_; }
  Interval domain() const { return domain_; }
  std::size_t grid_points() const { return values_.size(); }
  double relative_half_width() const { return relative_half_width_; }

  double operator()(double x) const
  {
    if (!domain_.contains(x))
      throw DomainError("level " + csv::format(x) + " outside oracle grid");
    const double u = std::clamp(std::log(x), log_levels_.front(), log_levels_.back());
    auto it = std::upper_bound(log_levels_.begin(), log_levels_.end(), u);
    const std::size_t hi = std::clamp<std::size_t>(static_cast<std::size_t>(it - log_levels_.begin()),
                                                   1, log_levels_.size() - 1);
    const std::size_t lo = hi - 1;
    const double t = (u - log_levels_[lo]) / (log_levels_[hi] - log_levels_[lo]);
    return values_[lo] + t * (values_[hi] - values_[lo]);
  }

private:
  double alpha_;
  double relative_half_width_;
  Interval domain_;
  std::vector<double> log_levels_;
  std::vector<double> values_;
};

struct OracleTrajectory
{
  double alpha = 0.5;
  double x0 = 0.4;
  std::vector<double> s;
  std::vector<double> values;
  std::size_t mc_size = 0;
  std::uint64_t seed = 0;
  std::size_t grid_points = 0;
  double relative_half_width = 0.0;
  double max_step = 1e-3;
};

//! Integrates `gradient` through the points of `s_grid` (starting at 0) with
//! RK4 substeps of at most `max_step`.
template <LevelGradient G>
std::vector<double> integrate_through(const G& gradient, double x0, std::span<const double> s_grid,
                                      double max_step)
{
  std::vector<double> out;
  out.reserve(s_grid.size());
  double z = x0;
  double s_prev = 0.0;
  for (double s : s_grid) {
    const double span = s - s_prev;
    if (span < 0.0)
      throw ValidationError("oracle time grid must be nondecreasing from 0");
    if (span > 0.0) {
      const auto k = static_cast<std::size_t>(std::ceil(span / max_step - 1e-9));
      const double delta = span / static_cast<double>(k);
      for (std::size_t j = 0; j < k; ++j)
        z += delta * increment(IntegratorMethod::rk4, gradient, z, delta);
    }
    out.push_back(z);
    s_prev = s;
  }
  return out;
}

//! Oracle level grid covering every level a trajectory from x0 can reach by
//! time s_max under the process's slowest and fastest decay.
inline Interval oracle_levels(const SimulationConfig& process, double x0, double s_max)
{
  return {x0 * std::exp(-process.b_range.hi * s_max) * 0.9, x0 * 1.05};
}

//! Ground-truth quantile trajectory z_{alpha,x0}(s) from a Monte Carlo
//! estimate of the true gradient.
inline OracleTrajectory oracle_quantile_trajectory(const OracleSample& sample,
                                                   const SimulationConfig& process, double alpha,
                                                   double x0, std::span<const double> s_grid)
{
  const double s_max = s_grid.empty() ? 0.0 : s_grid.back();
  OracleGradient gradient(sample, alpha, oracle_levels(process, x0, s_max));
  OracleTrajectory out;
  out.alpha = alpha;
  out.x0 = x0;
  out.s.assign(s_grid.begin(), s_grid.end());
  out.values = integrate_through(gradient, x0, s_grid, out.max_step);
  out.mc_size = sample.mc_size;
  out.seed = sample.seed;
  out.grid_points = gradient.grid_points();
  out.relative_half_width = gradient.relative_half_width();
  return out;
}

inline OracleTrajectory oracle_quantile_trajectory(double alpha, double x0,
                                                   std::span<const double> s_grid,
                                                   std::size_t mc_size, std::uint64_t oracle_seed,
                                                   const SimulationConfig& process = {})
{
  OracleSample sample(process, mc_size, oracle_seed);
  return oracle_quantile_trajectory(sample, process, alpha, x0, s_grid);
}

//! Brute-force cross-sectional quantile trajectory: paths whose level at the
//! random observation time lies within a relative `half_width` of x0 are
//! followed forward, shifted to start exactly at x0, and their pointwise
//! alpha-quantile is taken at every s.
inline std::vector<double> cross_sectional_quantile_trajectory(
  double alpha, double x0, std::span<const double> s_grid, std::size_t mc_size,
  std::uint64_t seed, const SimulationConfig& process = {}, double half_width = 0.01)
{
  Rng rng(seed);
  std::vector<std::pair<double, double>> kept; // (b, T)
  for (std::size_t i = 0; i < mc_size; ++i) {
    const double b = rng.uniform(process.b_range.lo, process.b_range.hi);
    const double t = rng.uniform(process.center_range.lo, process.center_range.hi);
    if (std::abs(level_at(b, t) - x0) <= half_width * x0)
      kept.emplace_back(b, t);
  }
  if (kept.size() < 100)
    throw InsufficientDataError("too few Monte Carlo paths pass through the starting level");
  std::vector<double> out;
  std::vector<double> column(kept.size());
  const auto k = static_cast<std::size_t>(
    std::max(0.0, std::ceil(alpha * static_cast<double>(kept.size())) - 1.0));
  for (double s : s_grid) {
    for (std::size_t i = 0; i < kept.size(); ++i) {
      const auto [b, t] = kept[i];
      column[i] = level_at(b, t + s) - level_at(b, t) + x0;
    }
    std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(k), column.end());
    out.push_back(column[k]);
  }
  return out;
}

//! Trapezoidal integral of (a - b)^2 over the grid s.
inline double integrated_squared_error(std::span<const double> s, std::span<const double> a,
                                       std::span<const double> b)
{
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double d0 = a[i] - b[i];
    const double d1 = a[i + 1] - b[i + 1];
    total += 0.5 * (s[i + 1] - s[i]) * (d0 * d0 + d1 * d1);
  }
  return total;
}

struct BenchmarkConfig
{
  std::vector<NoiseSetting> scenarios = {{NoiseScenario::true_xz, 0.0}};
  std::vector<std::size_t> ns = {300};
  std::vector<double> alphas = {0.10, 0.25, 0.50, 0.75, 0.90};
  std::size_t reps = 200;
  double h_k = 0.01;
  double h_h = 0.001;
  double x0 = 0.4;
  double horizon = 8.0;
  std::size_t steps = 1000;
  IntegratorMethod method = IntegratorMethod::rk4;
  std::uint64_t seed = 1;
  std::size_t oracle_mc = 1'000'000;
  std::optional<std::uint64_t> oracle_seed; //!< derived from seed when unset
  unsigned threads = 1;
  SimulationConfig process; //!< process and sampling design; n, noise and seed are overridden

  std::uint64_t resolved_oracle_seed() const
  {
    return oracle_seed.value_or(derive_seed(seed, 0x6f7261636c65ULL));
  }

  IntegratorSpec integrator() const
  {
    return IntegratorSpec{method, horizon / static_cast<double>(steps), horizon};
  }

  void validate() const
  {
    if (reps < 1)
      throw ValidationError("benchmark needs at least one replicate");
    if (scenarios.empty() || ns.empty() || alphas.empty())
      throw ValidationError("benchmark needs scenarios, sample sizes and quantile levels");
    for (const auto& s : scenarios)
      s.validate();
    for (double a : alphas)
      if (!(a > 0.0 && a < 1.0))
        throw ValidationError("quantile levels must lie in (0, 1)");
    for (auto n : ns)
      if (n < 2)
        throw ValidationError("sample sizes must be at least 2");
    KernelSpec{KernelKind::gaussian, h_k, h_h}.validate();
    if (steps < 1 || oracle_mc < 1000)
      throw ValidationError("steps must be positive and the oracle needs >= 1000 draws");
    integrator().validate();
  }
};

struct AiseCell
{
  NoiseSetting noise;
  std::size_t n = 0;
  double alpha = 0.0;
  double aise = std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;      //!< replicates contributing to the average
  std::size_t failed = 0;    //!< replicates excluded after a fit or domain failure
  std::size_t truncated = 0; //!< replicates whose trajectory stopped early

  double aise_x1000() const { return 1000.0 * aise; }
  bool warning() const { return 10 * failed > used + failed; }
};

struct AiseReport
{
  BenchmarkConfig config;
  std::vector<AiseCell> cells;
  std::vector<OracleTrajectory> oracles; //!< one per alpha

  bool warning() const
  {
    return std::any_of(cells.begin(), cells.end(), [](const auto& c) { return c.warning(); });
  }

  const AiseCell* find(const NoiseSetting& noise, std::size_t n, double alpha) const
  {
    for (const auto& c : cells)
      if (c.noise == noise && c.n == n && c.alpha == alpha)
        return &c;
    return nullptr;
  }
};

//! Per replicate: simulate, fit the joint-kernel c.d.f. with Gaussian
//! kernels, integrate each quantile trajectory from x0 and take the
//! trapezoidal integrated squared error against the oracle. Truncated
//! trajectories hold their last value. Replicate k uses the data seed
//! derive_seed(seed, k) for every scenario and sample size.
inline AiseReport run_aise_benchmark(const BenchmarkConfig& config)
{
  config.validate();
  const auto spec = config.integrator();
  const auto s_grid = spec.grid();

  AiseReport report;
  report.config = config;
  {
    OracleSample sample(config.process, config.oracle_mc, config.resolved_oracle_seed());
    for (double alpha : config.alphas)
      report.oracles.push_back(
        oracle_quantile_trajectory(sample, config.process, alpha, config.x0, s_grid));
  }

  const KernelSpec kernel{KernelKind::gaussian, config.h_k, config.h_h};
  const std::size_t na = config.alphas.size();
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();

  for (const auto& noise : config.scenarios) {
    for (auto n : config.ns) {
      // per replicate and alpha: ISE (NaN on failure) and truncation flag
      std::vector<double> ise(config.reps * na, nan);
      std::vector<char> truncated(config.reps * na, 0);
      parallel_for(config.reps, config.threads, [&](std::size_t k) {
        SimulationConfig sc = config.process;
        sc.n = n;
        sc.noise = noise;
        sc.seed = derive_seed(config.seed, k);
        std::optional<ConditionalCdf> cdf;
        try {
          cdf = fit_joint_kernel(generate_snippets(sc).dataset, kernel);
        } catch (const Error&) {
          return;
        }
        for (std::size_t a = 0; a < na; ++a) {
          try {
            const auto sol = quantile_trajectory(*cdf, config.alphas[a], config.x0, spec);
            std::vector<double> held(s_grid.size());
            for (std::size_t i = 0; i < held.size(); ++i)
              held[i] = sol.held_value(i);
            ise[k * na + a] = integrated_squared_error(s_grid, report.oracles[a].values, held);
            truncated[k * na + a] = sol.complete() ? 0 : 1;
          } catch (const Error&) {
          }
        }
      });

      for (std::size_t a = 0; a < na; ++a) {
        AiseCell cell;
        cell.noise = noise;
        cell.n = n;
        cell.alpha = config.alphas[a];
        double sum = 0.0;
        for (std::size_t k = 0; k < config.reps; ++k) {
          const double v = ise[k * na + a];
          if (std::isnan(v)) {
            ++cell.failed;
            continue;
          }
          sum += v;
          ++cell.used;
          cell.truncated += truncated[k * na + a];
        }
        if (cell.used > 0)
          cell.aise = sum / static_cast<double>(cell.used);
        report.cells.push_back(cell);
      }
    }
  }
  return report;
}

} // namespace qtraj::sim
