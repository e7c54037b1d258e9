#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace circneedlet {

// splitmix64 finalizer (Steele, Lea, Flood 2014). Used only to derive
// independent engine seeds from a root seed plus structural tags.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Counter-style stream derivation: the seed of a replication depends only on
// (root, tags...), never on how many streams were created before it, so a
// batch can be split across workers or restarted without changing results.
constexpr std::uint64_t derive_seed(std::uint64_t root,
                                    std::initializer_list<std::uint64_t> tags) noexcept {
  std::uint64_t h = splitmix64(root);
  for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t + 0x632BE59BD9B4E019ULL));
  return h;
}

inline std::uint64_t tag_of(double v) noexcept { return std::bit_cast<std::uint64_t>(v); }

inline std::uint64_t tag_of(long long v) noexcept { return static_cast<std::uint64_t>(v); }

// Random stream with distribution code written out explicitly: the standard
// library leaves distribution algorithms implementation-defined, and runs
// must be bit-identical wherever the manifest is replayed.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double uniform_open0() noexcept { return 1.0 - uniform(); }

  double standard_normal() noexcept {
    // Marsaglia polar method, no caching of the second deviate
    for (;;) {
      const double u = 2.0 * uniform() - 1.0;
      const double v = 2.0 * uniform() - 1.0;
      const double r2 = u * u + v * v;
      if (r2 > 0.0 && r2 < 1.0) return u * std::sqrt(-2.0 * std::log(r2) / r2);
    }
  }

  double exponential() noexcept { return -std::log(uniform_open0()); }

  // Poisson(mean): sequential inversion below 30, Hormann's PTRS above.
  std::uint64_t poisson(double mean) noexcept {
    if (!(mean > 0.0)) return 0;
    if (mean < 30.0) return poisson_inversion(mean);
    return poisson_ptrs(mean);
  }

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t poisson_inversion(double mean) noexcept {
    const double u = uniform();
    double p = std::exp(-mean);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }

  // W. Hormann, "The transformed rejection method for generating Poisson
  // random variables", Insurance: Mathematics and Economics 12 (1993).
  std::uint64_t poisson_ptrs(double mean) noexcept {
    const double slam = std::sqrt(mean);
    const double loglam = std::log(mean);
    const double b = 0.931 + 2.53 * slam;
    const double a = -0.059 + 0.02483 * b;
    const double invalpha = 1.1239 + 1.1328 / (b - 3.4);
    const double vr = 0.9277 - 3.6224 / (b - 2.0);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::fabs(u);
      const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(k);
      if (k < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v) + std::log(invalpha) - std::log(a / (us * us) + b) <=
          -mean + k * loglam - std::lgamma(k + 1.0)) {
        return static_cast<std::uint64_t>(k);
      }
    }
  }

  std::mt19937_64 engine_;
};

}  // namespace circneedlet
