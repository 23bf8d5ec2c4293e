#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace xform {

using Rng = std::mt19937_64;

/// Independent child seed for a numbered stream (splitmix64 finalizer).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::vector<double> gaussian_vector(Rng& rng, std::size_t n) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

/// Uniform draw in [0, 1).
inline double uniform01(Rng& rng) { return std::generate_canonical<double, 53>(rng); }

}  // namespace xform
