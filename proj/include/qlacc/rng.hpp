#pragma once

#include <cstdint>
#include <random>

namespace qlacc {

// All randomness in the project flows through this generator type with the
// explicit mappings below, so runs are reproducible bit-for-bit across
// platforms (uniform_real_distribution would be implementation-defined).
using Rng = std::mt19937_64;

// Uniform double in [0, 1) with 53 random bits.
inline double unit_double(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_double(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * unit_double(rng);
}

// Uniform integer in [0, n).
inline int uniform_int(Rng& rng, int n) {
  int k = static_cast<int>(unit_double(rng) * n);
  return k < n ? k : n - 1;
}

}  // namespace qlacc
