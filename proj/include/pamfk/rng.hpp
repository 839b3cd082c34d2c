#pragma once

#include <cmath>
#include <cstdint>

namespace pamfk::rng {

// Counter-based generator: every variate is a pure function of (seed, keys).
// This keeps sampled fields independent of evaluation order and thread count.

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix(uint64_t seed, uint64_t k1, uint64_t k2 = 0, uint64_t k3 = 0) {
  uint64_t x = splitmix64(seed ^ 0x2545f4914f6cdd1dULL);
  x = splitmix64(x ^ k1);
  x = splitmix64(x ^ k2);
  return splitmix64(x ^ k3);
}

/// Uniform in the open interval (0, 1).
inline double uniform(uint64_t seed, uint64_t k1, uint64_t k2 = 0, uint64_t k3 = 0) {
  const uint64_t bits = mix(seed, k1, k2, k3);
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller on two keyed uniforms.
inline double normal(uint64_t seed, uint64_t k1, uint64_t k2 = 0, uint64_t k3 = 0) {
  const double u1 = uniform(seed, k1, k2, k3 * 2 + 1);
  const double u2 = uniform(seed, k1, k2, k3 * 2 + 2);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

inline uint64_t key_signed(long v) {
  return static_cast<uint64_t>(v) * 2654435761ULL + 0x9e3779b9ULL;
}

}  // namespace pamfk::rng
