#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace podpipe {

/// SplitMix64 step; also used to derive independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

/// Derives a substream seed from a base seed and a tag. Used so that
/// every plot, pass, and frame draws from its own stream, making results
/// independent of generation order and worker count.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t s = seed ^ (tag + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
  return splitmix64(s);
}

/// Deterministic RNG with a pinned cross-platform sequence. Standard
/// library distributions are deliberately not used: their algorithms
/// differ between standard libraries, and simulator outputs must be
/// byte-identical for a given seed everywhere.
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform double in [0, 1).
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller (uncached, fixed draw order).
  double normal();
  double normal(double mean, double sd);

  /// Poisson sample; Knuth product method, normal approximation for
  /// large rates.
  int poisson(double lambda);

  /// Uniform integer in [lo, hi], inclusive.
  int uniform_int(int lo, int hi);

 private:
  std::uint64_t state_;
};

inline double DetRng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

inline double DetRng::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

inline int DetRng::uniform_int(int lo, int hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next_u64() % span);
}

inline double DetRng::normal() {
  // u1 kept away from zero so the log stays finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

inline double DetRng::normal(double mean, double sd) { return mean + sd * normal(); }

inline int DetRng::poisson(double lambda) {
  if (lambda <= 0.0) return 0;
  if (lambda < 64.0) {
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }
  const double s = std::round(normal(lambda, std::sqrt(lambda)));
  return s < 0.0 ? 0 : static_cast<int>(s);
}

}  // namespace podpipe
