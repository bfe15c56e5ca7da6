#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace rdesign {

// splitmix64; used both as a stream-derivation hash and as the generator
// behind the portable uniform/normal draws below. std::mt19937_64 would work
// as an engine but its distributions are implementation-defined, which would
// break byte-identical traces across standard libraries.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and up to three tags.
/// Counter-based so parallel and serial consumers agree.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = seed ^ (0x6a09e667f3bcc909ULL + tag);
  splitmix64(s);
  s ^= 0x3c6ef372fe94f82bULL * (a + 1);
  splitmix64(s);
  s ^= 0xa54ff53a5f1d36f1ULL * (b + 1);
  std::uint64_t out = s;
  return splitmix64(out);
}

/// Small deterministic RNG with portable uniform and normal draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {
    // Warm up so that small seeds do not produce correlated first draws.
    splitmix64(state_);
    splitmix64(state_);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    // Modulo bias is < 2^-40 for any n we ever use; not worth a reject loop.
    return next_u64() % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via Box-Muller (cached second value).
  double normal() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(theta);
    has_cached_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::uint64_t state_;
  double cached_ = 0.0;
  bool has_cached_ = false;
};

/// One U(0,1) keyed by (seed, tags); order-independent, safe to evaluate from
/// any thread for any candidate.
inline double keyed_uniform(std::uint64_t seed, std::uint64_t tag,
                            std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t s = derive_seed(seed, tag, a, b);
  return static_cast<double>(splitmix64(s) >> 11) * 0x1.0p-53;
}

}  // namespace rdesign
