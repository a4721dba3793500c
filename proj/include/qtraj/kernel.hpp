#pragma once

#include "error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qtraj {

enum class KernelKind
{
  gaussian,
  epanechnikov,
  uniform, //!< K = 1/2 on [-1, 1]; smoothing with it reproduces binning
};

inline std::string_view to_string(KernelKind kind)
{
  switch (kind) {
    case KernelKind::gaussian: return "gaussian";
    case KernelKind::epanechnikov: return "epanechnikov";
    case KernelKind::uniform: return "uniform";
  }
  return "?";
}

inline KernelKind parse_kernel_kind(std::string_view name)
{
  if (name == "gaussian") return KernelKind::gaussian;
  if (name == "epanechnikov") return KernelKind::epanechnikov;
  if (name == "uniform") return KernelKind::uniform;
  throw ValidationError("unknown kernel '" + std::string(name) + "'");
}

//! Kernel K (smoothing in level) and its distribution function H (smoothing
//! in slope), with bandwidths h_K and h_H.
struct KernelSpec
{
  KernelKind kind = KernelKind::gaussian;
  double h_k = 0.1;
  double h_h = 0.01;

  void validate() const
  {
    if (!(std::isfinite(h_k) && h_k > 0.0))
      throw ValidationError("level bandwidth h_K must be positive and finite");
    if (!(std::isfinite(h_h) && h_h > 0.0))
      throw ValidationError("slope bandwidth h_H must be positive and finite");
  }
};

namespace kernel {

//! Beyond this many bandwidths a Gaussian weight is below 1e-28 of its peak
//! and is dropped.
inline constexpr double gaussian_weight_radius = 11.5;

//! Phi(8.5) rounds to exactly 1.0 in double precision; Phi(-8.5) < 1e-17 is
//! dropped.
inline constexpr double gaussian_cdf_radius = 8.5;

inline bool compact(KernelKind kind) { return kind != KernelKind::gaussian; }

//! Largest kernel value K(0).
inline double peak(KernelKind kind)
{
  switch (kind) {
    case KernelKind::gaussian: return 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    case KernelKind::epanechnikov: return 0.75;
    case KernelKind::uniform: return 0.5;
  }
  return 0.0;
}

//! Support radius of the weight function, in bandwidths.
inline double weight_radius(KernelKind kind)
{
  return compact(kind) ? 1.0 : gaussian_weight_radius;
}

//! Radius beyond which H is 0 or 1, in bandwidths.
inline double cdf_radius(KernelKind kind)
{
  return compact(kind) ? 1.0 : gaussian_cdf_radius;
}

//! K(diff / h). The 1/h normalisation is omitted: every estimator here is a
//! ratio in which it cancels. Compact kernels test support as |diff| <= h
//! directly so that membership matches a bin of half-width h exactly.
inline double weight(KernelKind kind, double diff, double h)
{
  switch (kind) {
    case KernelKind::gaussian: {
      const double u = diff / h;
      if (std::abs(u) > gaussian_weight_radius)
        return 0.0;
      return peak(kind) * std::exp(-0.5 * u * u);
    }
    case KernelKind::epanechnikov: {
      if (std::abs(diff) > h)
        return 0.0;
      const double u = diff / h;
      return 0.75 * (1.0 - u * u);
    }
    case KernelKind::uniform:
      return std::abs(diff) > h ? 0.0 : 0.5;
  }
  return 0.0;
}

//! H(u) = integral of K from -inf to u.
inline double cdf(KernelKind kind, double u)
{
  switch (kind) {
    case KernelKind::gaussian:
      return 0.5 * std::erfc(-u * std::numbers::sqrt2 / 2.0);
    case KernelKind::epanechnikov:
      if (u <= -1.0) return 0.0;
      if (u >= 1.0) return 1.0;
      return 0.5 + 0.75 * u - 0.25 * u * u * u;
    case KernelKind::uniform:
      if (u <= -1.0) return 0.0;
      if (u >= 1.0) return 1.0;
      return 0.5 * (u + 1.0);
  }
  return 0.0;
}

} // namespace kernel

//! Silverman's rule of thumb, 0.9 min(sd, IQR/1.34) n^(-1/5). Falls back to
//! the standard deviation when the IQR is zero; throws if the sample has no
//! spread.
inline double silverman_bandwidth(std::span<const double> sample)
{
  const std::size_t n = sample.size();
  if (n < 2)
    throw InsufficientDataError("bandwidth selection needs at least 2 values");
  double mean = 0.0;
  for (double v : sample)
    mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : sample)
    ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));

  std::vector<double> sorted(sample.begin(), sample.end());
  std::sort(sorted.begin(), sorted.end());
  auto type7 = [&](double p) {
    const double h = (static_cast<double>(n) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = type7(0.75) - type7(0.25);

  double spread = sd;
  if (iqr > 0.0)
    spread = std::min(sd, iqr / 1.34);
  if (!(spread > 0.0))
    throw InsufficientDataError("bandwidth selection: sample has no spread");
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

} // namespace qtraj
