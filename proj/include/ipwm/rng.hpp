#pragma once

// Seed derivation and the few distributions the simulation needs.
//
// Every random stream is a std::mt19937_64 seeded with a value derived from
// (master seed, stream index...) by mix_seed(). The derivation is a splitmix64
// finaliser applied to the running state xor'd with each index, so streams
// are independent of the order in which replicates are executed.
//
// Uniform, bounded-integer and normal variates are generated here rather than
// through <random> distributions, whose algorithms are implementation-defined;
// this keeps seeded output identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace ipwm {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// mix_seed(s, {i, j}) == splitmix64(splitmix64(s ^ f(i)) ^ f(j)) with
/// f(k) = splitmix64(k + 1). Distinct index tuples give unrelated seeds.
inline std::uint64_t mix_seed(std::uint64_t master,
                              std::initializer_list<std::uint64_t> indices) {
  std::uint64_t state = splitmix64(master);
  for (std::uint64_t idx : indices) {
    state = splitmix64(state ^ splitmix64(idx + 1));
  }
  return state;
}

inline Rng make_rng(std::uint64_t master,
                    std::initializer_list<std::uint64_t> indices) {
  return Rng(mix_seed(master, indices));
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

/// Unbiased integer in [0, bound) (Lemire's multiply-shift with rejection).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
  std::uint64_t x = rng();
  __uint128_t m = static_cast<__uint128_t>(x) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      x = rng();
      m = static_cast<__uint128_t>(x) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

/// Standard normal variates by the Marsaglia polar method; caches the spare.
class NormalSampler {
 public:
  double operator()(Rng& rng) {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform01(rng) - 1.0;
      v = 2.0 * uniform01(rng) - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

 private:
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ipwm
