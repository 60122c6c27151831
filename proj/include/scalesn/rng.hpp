#pragma once

#include <cstdint>
#include <random>

namespace scalesn {

/// One named generator for every stochastic operation in the library.
/// Reproducibility is guaranteed for a fixed standard library; the
/// distributions below are not bit-portable across implementations.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer; good avalanche, cheap.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derives an independent child seed from (base, stream). Every module that
/// needs several generators splits one user-facing seed through this, so a
/// single integer pins an entire experiment.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  return mix64(base ^ mix64(stream));
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t s1,
                                 std::uint64_t s2) {
  return derive_seed(derive_seed(base, s1), s2);
}

}  // namespace scalesn
