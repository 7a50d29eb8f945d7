#pragma once

// Counter-based random streams.
//
// Every draw is a pure function of (seed, stream, counter):
//
//   key    = fmix(seed ^ fmix(stream ^ 0xD1B54A32D192ED03))
//   word_k = fmix(key + k * 0x9E3779B97F4A7C15),   k = 1, 2, ...
//
// where fmix is the SplitMix64 output finalizer. Uniforms take the top 53
// bits, normals use the polar-free Box-Muller pair (both values consumed in
// order). Nothing here depends on <random> distributions, whose output is
// implementation-defined.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

namespace curvlab {

inline constexpr std::uint64_t fmix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : key_(fmix64(seed ^ fmix64(stream ^ 0xD1B54A32D192ED03ULL))) {}

  std::uint64_t next_u64() noexcept {
    ++counter_;
    return fmix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Uniform point on the standard simplex of dimension n-1 (Dirichlet(1,...,1)).
  std::vector<double> simplex(std::size_t n) {
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& x : w) {
      x = -std::log(uniform());
      total += x;
    }
    for (auto& x : w) x /= total;
    return w;
  }

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace curvlab
