#pragma once

#include "error.hpp"
#include "kernel.hpp"
#include "snippet.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qtraj {

enum class CdfMethod
{
  binned,
  kernel,
  joint_kernel,
  logistic,
};

inline std::string_view to_string(CdfMethod method)
{
  switch (method) {
    case CdfMethod::binned: return "binned";
    case CdfMethod::kernel: return "kernel";
    case CdfMethod::joint_kernel: return "joint-kernel";
    case CdfMethod::logistic: return "logistic";
  }
  return "?";
}

inline CdfMethod parse_cdf_method(std::string_view name)
{
  if (name == "binned") return CdfMethod::binned;
  if (name == "kernel") return CdfMethod::kernel;
  if (name == "joint-kernel" || name == "joint_kernel") return CdfMethod::joint_kernel;
  if (name == "logistic") return CdfMethod::logistic;
  throw ValidationError("unknown estimator '" + std::string(name) + "'");
}

//! Coefficients of F(z|x) = logistic(intercept + level_coef x + slope_coef z).
struct LogisticFit
{
  double intercept = 0.0;
  double level_coef = 0.0;
  double slope_coef = 0.0;
  int iterations = 0;
  bool level_dropped = false; //!< level had no spread; its coefficient is fixed at 0
};

//! Bisection settings for quantile inversion of continuous estimators.
struct InversionSettings
{
  double tolerance = 1e-8; //!< stop once the bracket is narrower than this
  int max_doublings = 10;  //!< bracket expansions before giving up
};

namespace detail {

//! Level/slope sample ordered by level.
struct LevelSortedSample
{
  std::vector<double> levels;
  std::vector<double> slopes;

  explicit LevelSortedSample(std::span<const LevelSlopePair> pairs)
  {
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return pairs[a].level < pairs[b].level;
    });
    levels.reserve(pairs.size());
    slopes.reserve(pairs.size());
    for (auto i : order) {
      levels.push_back(pairs[i].level);
      slopes.push_back(pairs[i].slope);
    }
  }

  std::size_t size() const { return levels.size(); }

  //! Index range of levels within `radius` of x, padded by a relative
  //! epsilon; callers apply the exact membership test.
  std::pair<std::size_t, std::size_t> window(double x, double radius) const
  {
    const double pad = radius * (1.0 + 1e-9) + 1e-300;
    auto lo = std::lower_bound(levels.begin(), levels.end(), x - pad);
    auto hi = std::upper_bound(lo, levels.end(), x + pad);
    return {static_cast<std::size_t>(lo - levels.begin()),
            static_cast<std::size_t>(hi - levels.begin())};
  }
};

//! Slopes near a query level with their kernel weights, sorted by slope.
struct LocalSlice
{
  std::vector<double> slopes;
  std::vector<double> weights;
  std::vector<double> cumulative; //!< cumulative[k] = weight of the first k slopes
  double total = 0.0;

  std::size_t size() const { return slopes.size(); }
};

inline LocalSlice
make_slice(const LevelSortedSample& sample, std::span<const double> weights_in_window,
           std::size_t first)
{
  std::vector<std::pair<double, double>> items;
  items.reserve(weights_in_window.size());
  for (std::size_t k = 0; k < weights_in_window.size(); ++k)
    if (weights_in_window[k] > 0.0)
      items.emplace_back(sample.slopes[first + k], weights_in_window[k]);
  std::sort(items.begin(), items.end());

  LocalSlice slice;
  slice.slopes.reserve(items.size());
  slice.weights.reserve(items.size());
  slice.cumulative.reserve(items.size() + 1);
  slice.cumulative.push_back(0.0);
  for (const auto& [z, w] : items) {
    slice.slopes.push_back(z);
    slice.weights.push_back(w);
    slice.cumulative.push_back(slice.cumulative.back() + w);
  }
  slice.total = slice.cumulative.back();
  return slice;
}

inline double sigmoid(double eta)
{
  if (eta >= 0.0)
    return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

} // namespace detail

class ConditionalCdf;
ConditionalCdf fit_binned(const SnippetDataset& dataset, double half_width);
ConditionalCdf fit_kernel(const SnippetDataset& dataset, const KernelSpec& kernel);
ConditionalCdf fit_joint_kernel(const SnippetDataset& dataset, const KernelSpec& kernel);
ConditionalCdf fit_logistic(const SnippetDataset& dataset, std::span<const double> z_grid);

//! Fitted estimator of the conditional distribution F(z|x) of slope given
//! level. Copies share the same immutable fitted state; evaluation is
//! thread-safe.
class ConditionalCdf
{
public:
  CdfMethod method() const { return state_->method; }
  const Interval& level_support() const { return state_->level_support; }
  const Interval& slope_support() const { return state_->slope_support; }
  std::size_t sample_size() const { return state_->sample_size; }
  //! Kernel for the smoothing estimators; nullopt for binned and logistic.
  const std::optional<KernelSpec>& kernel() const { return state_->kernel; }
  //! Bin half-width h of the binned estimator.
  double bin_half_width() const { return state_->bin_half_width; }
  const LogisticFit& logistic() const { return state_->logistic; }

  //! True for the estimators whose value jumps at observed slopes.
  bool is_step() const
  {
    return method() == CdfMethod::binned || method() == CdfMethod::kernel;
  }

  //! F(z|x). Throws InsufficientDataError when the kernel mass around x
  //! falls below the denominator floor.
  double evaluate(double x, double z) const
  {
    if (method() == CdfMethod::logistic)
      return logistic_value(x, z);
    return evaluate_slice(local_slice(x), z);
  }

  //! inf{z : F(z|x) >= alpha}. Exact for step estimators; bisection with a
  //! final secant step within the last bracket otherwise.
  double quantile(double x, double alpha, const InversionSettings& settings = {}) const
  {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ValidationError("quantile level must lie in (0, 1)");
    if (method() == CdfMethod::logistic)
      return bisect([&](double z) { return logistic_value(x, z); }, alpha, settings);

    const auto slice = local_slice(x);
    if (is_step()) {
      // first k with F(z_(k)) >= alpha; ties share a value so any tied
      // index yields the same z
      std::size_t lo = 0, hi = slice.size();
      while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        if (slice.cumulative[mid + 1] / slice.total >= alpha)
          hi = mid;
        else
          lo = mid + 1;
      }
      return slice.slopes[std::min(lo, slice.size() - 1)];
    }
    return bisect([&](double z) { return evaluate_slice(slice, z); }, alpha, settings);
  }

  //! Central finite difference dF/dx for diagnostics, step 1e-5 of the level
  //! range. Not used by any estimator.
  double level_derivative(double x, double z) const
  {
    const double step = 1e-5 * std::max(level_support().width(), 1e-12);
    return (evaluate(x + step, z) - evaluate(x - step, z)) / (2.0 * step);
  }

private:
  struct State
  {
    CdfMethod method = CdfMethod::joint_kernel;
    Interval level_support;
    Interval slope_support;
    std::size_t sample_size = 0;
    std::optional<KernelSpec> kernel;
    double bin_half_width = 0.0;
    LogisticFit logistic;
    std::optional<detail::LevelSortedSample> sample;
  };

  explicit ConditionalCdf(std::shared_ptr<const State> state)
    : state_(std::move(state))
  {}

  static State base_state(const SnippetDataset& dataset, CdfMethod method)
  {
    State s;
    s.method = method;
    s.level_support = dataset.level_range();
    s.slope_support = dataset.slope_range();
    s.sample_size = dataset.size();
    return s;
  }

  double logistic_value(double x, double z) const
  {
    const auto& c = state_->logistic;
    return detail::sigmoid(c.intercept + c.level_coef * x + c.slope_coef * z);
  }

  detail::LocalSlice local_slice(double x) const
  {
    const auto& sample = *state_->sample;
    const double n = static_cast<double>(sample.size());
    if (method() == CdfMethod::binned) {
      const double h = state_->bin_half_width;
      auto [first, last] = sample.window(x, h);
      std::vector<double> w(last - first);
      for (std::size_t i = first; i < last; ++i)
        w[i - first] = std::abs(x - sample.levels[i]) <= h ? 1.0 : 0.0;
      auto slice = detail::make_slice(sample, w, first);
      if (slice.size() == 0)
        throw InsufficientDataError("no observations with level in [" +
                                    csv::format(x - h) + ", " + csv::format(x + h) +
                                    "] (x = " + csv::format(x) +
                                    ", h = " + csv::format(h) + ")");
      return slice;
    }

    const auto& k = *state_->kernel;
    auto [first, last] = sample.window(x, kernel::weight_radius(k.kind) * k.h_k);
    std::vector<double> w(last - first);
    for (std::size_t i = first; i < last; ++i)
      w[i - first] = kernel::weight(k.kind, x - sample.levels[i], k.h_k);
    auto slice = detail::make_slice(sample, w, first);
    const double floor = n * 1e-12 * kernel::peak(k.kind);
    if (!(slice.total >= floor) || slice.size() == 0)
      throw InsufficientDataError("kernel mass at level x = " + csv::format(x) +
                                  " is below the floor (h_K = " + csv::format(k.h_k) +
                                  ")");
    return slice;
  }

  double evaluate_slice(const detail::LocalSlice& slice, double z) const
  {
    if (is_step()) {
      auto it = std::upper_bound(slice.slopes.begin(), slice.slopes.end(), z);
      return slice.cumulative[static_cast<std::size_t>(it - slice.slopes.begin())] /
             slice.total;
    }
    const auto& k = *state_->kernel;
    const double reach = kernel::cdf_radius(k.kind) * k.h_h;
    auto lo = std::lower_bound(slice.slopes.begin(), slice.slopes.end(), z - reach);
    auto hi = std::upper_bound(lo, slice.slopes.end(), z + reach);
    const auto first = static_cast<std::size_t>(lo - slice.slopes.begin());
    const auto last = static_cast<std::size_t>(hi - slice.slopes.begin());
    double acc = slice.cumulative[first];
    for (std::size_t i = first; i < last; ++i) {
      acc += slice.weights[i] * kernel::cdf(k.kind, (z - slice.slopes[i]) / k.h_h);
    }
    return std::clamp(acc / slice.total, 0.0, 1.0);
  }

  template <class F>
  double bisect(F&& cdf, double alpha, const InversionSettings& settings) const
  {
    const Interval& zr = slope_support();
    double margin = 0.0;
    if (kernel())
      margin = 10.0 * kernel()->h_h;
    else
      margin = zr.width() > 0.0 ? zr.width() : std::max(1.0, std::abs(zr.lo));
    double lo = zr.lo - margin;
    double hi = zr.hi + margin;
    double f_lo = cdf(lo);
    double f_hi = cdf(hi);
    int doublings = 0;
    while (!(f_lo < alpha) || !(f_hi >= alpha)) {
      if (++doublings > settings.max_doublings)
        throw InversionError("could not bracket quantile level " + csv::format(alpha) +
                             " after " + std::to_string(settings.max_doublings) +
                             " bracket doublings");
      const double width = hi - lo;
      if (!(f_lo < alpha)) {
        lo -= width;
        f_lo = cdf(lo);
      }
      if (!(f_hi >= alpha)) {
        hi += width;
        f_hi = cdf(hi);
      }
    }
    while (hi - lo >= settings.tolerance) {
      const double mid = lo + 0.5 * (hi - lo);
      if (mid <= lo || mid >= hi)
        break;
      const double f_mid = cdf(mid);
      if (f_mid >= alpha) {
        hi = mid;
        f_hi = f_mid;
      } else {
        lo = mid;
        f_lo = f_mid;
      }
    }
    // F(lo) < alpha <= F(hi): interpolate inside the final bracket
    if (f_hi > f_lo)
      return lo + (alpha - f_lo) / (f_hi - f_lo) * (hi - lo);
    return hi;
  }

  std::shared_ptr<const State> state_;

  friend ConditionalCdf fit_binned(const SnippetDataset&, double);
  friend ConditionalCdf fit_kernel(const SnippetDataset&, const KernelSpec&);
  friend ConditionalCdf fit_joint_kernel(const SnippetDataset&, const KernelSpec&);
  friend ConditionalCdf fit_logistic(const SnippetDataset&, std::span<const double>);
};

//! Empirical c.d.f. of the slopes whose level lies in [x - h, x + h],
//! normalised by the number of such slopes.
inline ConditionalCdf fit_binned(const SnippetDataset& dataset, double half_width)
{
  if (!(std::isfinite(half_width) && half_width > 0.0))
    throw ValidationError("bin half-width must be positive and finite");
  auto s = ConditionalCdf::base_state(dataset, CdfMethod::binned);
  s.bin_half_width = half_width;
  s.sample.emplace(dataset.pairs());
  return ConditionalCdf(std::make_shared<const ConditionalCdf::State>(std::move(s)));
}

//! Nadaraya-Watson weighted indicator estimator.
inline ConditionalCdf fit_kernel(const SnippetDataset& dataset, const KernelSpec& kernel)
{
  kernel.validate();
  auto s = ConditionalCdf::base_state(dataset, CdfMethod::kernel);
  s.kernel = kernel;
  s.sample.emplace(dataset.pairs());
  return ConditionalCdf(std::make_shared<const ConditionalCdf::State>(std::move(s)));
}

//! Kernel estimator with the indicator replaced by H((z - Z_i) / h_H);
//! continuous and nondecreasing in z.
inline ConditionalCdf fit_joint_kernel(const SnippetDataset& dataset, const KernelSpec& kernel)
{
  kernel.validate();
  auto s = ConditionalCdf::base_state(dataset, CdfMethod::joint_kernel);
  s.kernel = kernel;
  s.sample.emplace(dataset.pairs());
  return ConditionalCdf(std::make_shared<const ConditionalCdf::State>(std::move(s)));
}

//! `count` equally spaced points spanning the slope range of the dataset.
inline std::vector<double> default_z_grid(const SnippetDataset& dataset, std::size_t count = 21)
{
  const auto& r = dataset.slope_range();
  std::vector<double> grid(count);
  for (std::size_t g = 0; g < count; ++g)
    grid[g] = count == 1 ? r.lo
                         : r.lo + r.width() * static_cast<double>(g) /
                                    static_cast<double>(count - 1);
  if (count > 1)
    grid.back() = r.hi;
  return grid;
}

//! Logistic model of F(z|x). Each pair is expanded into pseudo-observations
//! (1(Z_i <= z), X_i, z) over the z grid, and the binary regression is fitted
//! by iteratively reweighted least squares on standardised covariates.
inline ConditionalCdf fit_logistic(const SnippetDataset& dataset, std::span<const double> z_grid)
{
  std::vector<double> grid_storage;
  if (z_grid.empty()) {
    grid_storage = default_z_grid(dataset);
    z_grid = grid_storage;
  }
  for (double z : z_grid)
    if (!std::isfinite(z))
      throw ValidationError("logistic z grid must be finite");

  const auto& pairs = dataset.pairs();
  std::size_t ones = 0;
  for (const auto& p : pairs)
    for (double z : z_grid)
      ones += p.slope <= z ? 1 : 0;
  const std::size_t total = pairs.size() * z_grid.size();
  if (ones == 0 || ones == total)
    throw FitError("logistic fit failed: perfect separation (every pseudo-observation "
                   "has the same outcome)");

  auto moments = [](auto&& values, std::size_t count) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(count);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::pair{mean, std::sqrt(ss / static_cast<double>(count))};
  };
  std::vector<double> levels;
  levels.reserve(pairs.size());
  for (const auto& p : pairs) levels.push_back(p.level);
  auto [x_mean, x_sd] = moments(levels, levels.size());
  auto [z_mean, z_sd] = moments(z_grid, z_grid.size());
  const bool use_level = x_sd > 0.0;
  if (!(z_sd > 0.0))
    throw FitError("logistic fit failed: z grid has no spread");

  const int p = use_level ? 3 : 2;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd row(p);
  int iterations = 0;
  bool converged = false;
  constexpr int max_iterations = 100;
  for (; iterations < max_iterations && !converged; ++iterations) {
    Eigen::MatrixXd xtwx = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xtwy = Eigen::VectorXd::Zero(p);
    double deviance = 0.0;
    for (const auto& pr : pairs) {
      for (double z : z_grid) {
        row(0) = 1.0;
        row(1) = (z - z_mean) / z_sd;
        if (use_level)
          row(2) = (pr.level - x_mean) / x_sd;
        const double eta = row.dot(beta);
        const double mu = detail::sigmoid(eta);
        const double w = std::max(mu * (1.0 - mu), 1e-300);
        const double y = pr.slope <= z ? 1.0 : 0.0;
        deviance += y > 0.5 ? -std::log(std::max(mu, 1e-300))
                            : -std::log(std::max(1.0 - mu, 1e-300));
        const double working = eta + (y - mu) / w;
        xtwx.noalias() += w * row * row.transpose();
        xtwy.noalias() += w * working * row;
      }
    }
    if (deviance < 1e-8 * static_cast<double>(total))
      throw FitError("logistic fit failed: perfect separation (deviance "
                     "vanishes along the iterations)");
    Eigen::LDLT<Eigen::MatrixXd> ldlt(xtwx);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw FitError("logistic fit failed: singular weighted design");
    Eigen::VectorXd next = ldlt.solve(xtwy);
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > 1e8)
      throw FitError("logistic fit failed: coefficients diverge (separation)");
    const double change = (next - beta).cwiseAbs().maxCoeff();
    converged = change < 1e-10 * (1.0 + next.cwiseAbs().maxCoeff());
    beta = next;
  }
  if (!converged)
    throw FitError("logistic fit failed: IRLS did not converge in " +
                   std::to_string(max_iterations) + " iterations");

  LogisticFit fit;
  fit.iterations = iterations;
  fit.level_dropped = !use_level;
  fit.slope_coef = beta(1) / z_sd;
  fit.level_coef = use_level ? beta(2) / x_sd : 0.0;
  fit.intercept = beta(0) - fit.slope_coef * z_mean - fit.level_coef * (use_level ? x_mean : 0.0);
  if (!(fit.slope_coef > 0.0))
    throw FitError("logistic fit failed: slope coefficient is not positive, so the "
                   "fitted c.d.f. would decrease in z");

  auto s = ConditionalCdf::base_state(dataset, CdfMethod::logistic);
  s.logistic = fit;
  return ConditionalCdf(std::make_shared<const ConditionalCdf::State>(std::move(s)));
}

inline ConditionalCdf fit_logistic(const SnippetDataset& dataset)
{
  return fit_logistic(dataset, std::span<const double>{});
}

//! Estimator choice plus tuning. Unset bandwidths are resolved from the data
//! by Silverman's rule.
struct CdfOptions
{
  CdfMethod method = CdfMethod::joint_kernel;
  KernelKind kernel = KernelKind::gaussian;
  std::optional<double> h_k;
  std::optional<double> h_h;
  std::optional<double> bin_width;
  std::size_t z_grid_size = 21;

  //! Copy with every unset bandwidth filled in for `dataset`.
  CdfOptions resolved(const SnippetDataset& dataset) const
  {
    CdfOptions out = *this;
    auto levels = [&] {
      std::vector<double> v;
      for (const auto& p : dataset.pairs()) v.push_back(p.level);
      return v;
    };
    auto slopes = [&] {
      std::vector<double> v;
      for (const auto& p : dataset.pairs()) v.push_back(p.slope);
      return v;
    };
    if (!out.h_k && (method == CdfMethod::kernel || method == CdfMethod::joint_kernel))
      out.h_k = silverman_bandwidth(levels());
    if (!out.h_h && method == CdfMethod::joint_kernel)
      out.h_h = silverman_bandwidth(slopes());
    if (!out.bin_width && method == CdfMethod::binned)
      out.bin_width = silverman_bandwidth(levels());
    return out;
  }

  KernelSpec kernel_spec() const
  {
    return KernelSpec{kernel, h_k.value_or(1.0), h_h.value_or(1.0)};
  }
};

//! Fits the estimator selected by `options`, resolving default bandwidths.
inline ConditionalCdf fit_cdf(const SnippetDataset& dataset, const CdfOptions& options)
{
  const auto o = options.resolved(dataset);
  switch (o.method) {
    case CdfMethod::binned: return fit_binned(dataset, *o.bin_width);
    case CdfMethod::kernel: return fit_kernel(dataset, o.kernel_spec());
    case CdfMethod::joint_kernel: return fit_joint_kernel(dataset, o.kernel_spec());
    case CdfMethod::logistic: {
      if (o.z_grid_size < 2)
        throw ValidationError("logistic z grid needs at least 2 points");
      auto grid = default_z_grid(dataset, o.z_grid_size);
      return fit_logistic(dataset, grid);
    }
  }
  throw ValidationError("unknown estimator");
}

//! Instantaneous alpha-quantile of slope as a function of level, defined on
//! the level range of the fitted data.
class QuantileGradient
{
public:
  QuantileGradient(ConditionalCdf cdf, double alpha, InversionSettings settings = {})
    : cdf_(std::move(cdf))
    , alpha_(alpha)
    , settings_(settings)
  {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw ValidationError("quantile level alpha must lie in (0, 1)");
  }

  double alpha() const { return alpha_; }
  const ConditionalCdf& cdf() const { return cdf_; }
  Interval domain() const { return cdf_.level_support(); }

  double operator()(double level) const
  {
    if (!domain().contains(level))
      throw DomainError("level " + csv::format(level) + " outside estimator support [" +
                        csv::format(domain().lo) + ", " + csv::format(domain().hi) + "]");
    return cdf_.quantile(level, alpha_, settings_);
  }

private:
  ConditionalCdf cdf_;
  double alpha_;
  InversionSettings settings_;
};

inline QuantileGradient invert_to_quantile(const ConditionalCdf& cdf, double alpha,
                                           InversionSettings settings = {})
{
  return QuantileGradient(cdf, alpha, settings);
}

//! Nadaraya-Watson mean of slope given level; the gradient of the
//! conditional-mean trajectory.
class MeanGradient
{
public:
  MeanGradient(const SnippetDataset& dataset, const KernelSpec& kernel)
    : sample_(std::make_shared<const detail::LevelSortedSample>(dataset.pairs()))
    , kernel_(kernel)
    , domain_(dataset.level_range())
  {
    kernel.validate();
  }

  Interval domain() const { return domain_; }
  const KernelSpec& kernel() const { return kernel_; }

  double operator()(double level) const
  {
    if (!domain_.contains(level))
      throw DomainError("level " + csv::format(level) + " outside estimator support");
    auto [first, last] = sample_->window(level, kernel::weight_radius(kernel_.kind) * kernel_.h_k);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = first; i < last; ++i) {
      const double w = kernel::weight(kernel_.kind, level - sample_->levels[i], kernel_.h_k);
      num += w * sample_->slopes[i];
      den += w;
    }
    const double floor = static_cast<double>(sample_->size()) * 1e-12 * kernel::peak(kernel_.kind);
    if (!(den >= floor) || den == 0.0)
      throw InsufficientDataError("kernel mass at level x = " + csv::format(level) +
                                  " is below the floor");
    return num / den;
  }

private:
  std::shared_ptr<const detail::LevelSortedSample> sample_;
  KernelSpec kernel_;
  Interval domain_;
};

inline MeanGradient conditional_mean(const SnippetDataset& dataset, const KernelSpec& kernel)
{
  return MeanGradient(dataset, kernel);
}

//! One cell of the diagnostic evaluation lattice; F is NaN where the
//! estimator has no local data.
struct CdfGridPoint
{
  double x = 0.0;
  double z = 0.0;
  double F = 0.0;
};

inline std::vector<CdfGridPoint> cdf_grid(const ConditionalCdf& cdf, std::span<const double> xs,
                                          std::span<const double> zs)
{
  std::vector<CdfGridPoint> out;
  out.reserve(xs.size() * zs.size());
  for (double x : xs) {
    for (double z : zs) {
      double f = std::numeric_limits<double>::quiet_NaN();
      try {
        f = cdf.evaluate(x, z);
      } catch (const InsufficientDataError&) {
      }
      out.push_back({x, z, f});
    }
  }
  return out;
}

} // namespace qtraj
