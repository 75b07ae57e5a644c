#pragma once

// Portable random variates. The standard <random> distributions are
// implementation-defined, so every sampler in this library draws raw 64-bit
// words from the engine and transforms them here. This keeps sample files
// byte-identical across standard libraries for a fixed seed.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>

namespace mixsimplex {

using Rng = std::mt19937_64;

/// A 64-bit uniform random bit generator (full range).
template <class G>
concept Urbg64 = std::uniform_random_bit_generator<G> && requires {
  requires G::min() == 0;
  requires G::max() == std::numeric_limits<std::uint64_t>::max();
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent stream `index` derived from `seed`. Stream 0 is the one a
/// single-threaded command uses; Monte Carlo chunks use 1, 2, ...
inline Rng make_stream(std::uint64_t seed, std::uint64_t index = 0) {
  std::uint64_t state = seed;
  std::uint64_t mixed = splitmix64(state);
  state = mixed ^ (index * 0xd1b54a32d192ed03ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state)),
                    static_cast<std::uint32_t>(splitmix64(state))};
  return Rng(seq);
}

/// Uniform on the open interval (0, 1), 53 bits.
template <Urbg64 G>
double uniform01(G& g) {
  return (static_cast<double>(g() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal by Box-Muller; consumes two words, returns one variate.
template <Urbg64 G>
double standard_normal(G& g) {
  const double u1 = uniform01(g);
  const double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Gumbel(0, 1) as -log(-log U) with U clamped away from {0, 1}.
template <Urbg64 G>
double standard_gumbel(G& g) {
  double u = uniform01(g);
  if (u < 1e-300) u = 1e-300;
  if (u > 1.0 - 1e-16) u = 1.0 - 1e-16;
  return -std::log(-std::log(u));
}

/// log of a Gamma(shape, 1) draw (Marsaglia-Tsang squeeze; shapes below one
/// use the boost G(a) = G(a + 1) * U^(1/a), kept in log space).
template <Urbg64 G>
double log_gamma_draw(G& g, double shape) {
  double log_boost = 0.0;
  if (shape < 1.0) {
    log_boost = std::log(uniform01(g)) / shape;
    shape += 1.0;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = standard_normal(g);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01(g);
    if (u < 1.0 - 0.0331 * x * x * x * x ||
        std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return std::log(d * v) + log_boost;
    }
  }
}

}  // namespace mixsimplex
