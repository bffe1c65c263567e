#pragma once

#include <cstdint>
#include <random>

namespace usimrank {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix64(master ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

// Portable conversions: std::uniform_real_distribution is implementation-defined,
// these are bit-reproducible for a given engine sequence.

/// Uniform double in [0, 1).
template <class URBG>
double uniform01(URBG& rng) {
  static_assert(URBG::max() - URBG::min() == ~std::uint64_t{0}, "expects a 64-bit engine");
  return static_cast<double>((rng() - URBG::min()) >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1].
template <class URBG>
double uniform_open0(URBG& rng) {
  return 1.0 - uniform01(rng);
}

template <class URBG>
bool bernoulli(URBG& rng, double p) {
  return p >= 1.0 || uniform01(rng) < p;
}

/// Uniform integer in [0, bound), Lemire's nearly-divisionless method.
template <class URBG>
std::uint64_t uniform_below(URBG& rng, std::uint64_t bound) {
  unsigned __int128 m = static_cast<unsigned __int128>(rng() - URBG::min()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<unsigned __int128>(rng() - URBG::min()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

inline std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace usimrank
