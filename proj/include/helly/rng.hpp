#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace helly {

// SplitMix64 finalizer; the i-th draw below is a pure function of (key, i).
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based generator: draw i of a stream depends only on (seed, stream,
// i), so sample ranges can be sharded across workers and merged into the same
// totals no matter how the work is split.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(splitmix64(seed ^ splitmix64(0xda3e39cb94b95bdbULL * (stream + 1)))) {}

  std::uint64_t bits(std::uint64_t counter) const {
    return splitmix64(key_ + counter * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform in (0, 1].
  double u01(std::uint64_t counter) const {
    return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal, one value per counter; counters 2p and 2p+1 share a
  // Box-Muller pair, so any aligned range of counters is reproducible.
  double gaussian(std::uint64_t counter) const {
    const std::uint64_t pair = counter >> 1;
    const double u1 = u01(2 * pair);
    const double u2 = u01(2 * pair + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    return (counter & 1) ? r * std::sin(theta) : r * std::cos(theta);
  }

  // Counters consumed per sphere point; even so pairs stay aligned.
  static std::uint64_t sphere_stride(int n) {
    return static_cast<std::uint64_t>(n + (n & 1));
  }

  // Uniform direction on the unit sphere in R^n, consuming counters
  // [base, base + sphere_stride(n)).
  std::vector<double> sphere_point(int n, std::uint64_t base) const {
    std::vector<double> g(n);
    double norm2 = 0.0;
    for (int k = 0; k < n; ++k) {
      g[k] = gaussian(base + static_cast<std::uint64_t>(k));
      norm2 += g[k] * g[k];
    }
    if (norm2 < 1e-24) {
      for (int k = 0; k < n; ++k) g[k] = 0.0;
      g[0] = 1.0;
      return g;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (int k = 0; k < n; ++k) g[k] *= inv;
    return g;
  }

 private:
  std::uint64_t key_;
};

}  // namespace helly
