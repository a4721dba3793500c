#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace qtraj {

//! SplitMix64 finalizer; used to decorrelate derived seeds.
inline std::uint64_t mix64(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

//! Seed of the independent stream with the given index under `master`.
//! Replicates seeded this way give the same numbers regardless of the order
//! or thread on which they run.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index)
{
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

//! Portable random stream. The engine is fully specified by the standard;
//! the distributions are implemented here because the standard library ones
//! are not reproducible across implementations.
class Rng
{
public:
  explicit Rng(std::uint64_t seed)
    : engine_(seed)
  {}

  std::uint64_t next() { return engine_(); }

  //! Uniform on [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  //! Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  //! Uniform integer on [0, n), n > 0, without modulo bias.
  std::uint64_t below(std::uint64_t n)
  {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

  //! Standard normal (Box-Muller, one variate per call).
  double normal()
  {
    double u1 = 1.0 - uniform(); // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::mt19937_64 engine_;
};

} // namespace qtraj
