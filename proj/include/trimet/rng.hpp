#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace trimet {

// All randomness in the toolkit flows from one top-level seed. Component
// streams are derived by hashing the component name (and optional indices)
// into the seed, so adding a consumer never shifts another consumer's stream.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view component) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a over the component name
  for (char c : component) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return splitmix64(base ^ h);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view component,
                                 std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(derive_seed(base, component) ^ splitmix64(a ^ splitmix64(b)));
}

/// Uniform double in [0, 1) from the top 53 bits. Portable across platforms,
/// unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n). Rejection sampling, portable.
inline std::uint64_t bounded_uint(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % n;
}

/// Standard normal via Box-Muller. Draws two uniforms per call.
inline double normal01(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace trimet
