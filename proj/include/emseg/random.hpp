#pragma once

#include <cstdint>
#include <random>

namespace emseg {

// mt19937_64 output is fixed by the standard, but the std distributions are not,
// so draws go through these helpers to stay identical across toolchains.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n), rejection-sampled (no modulo bias). n must be > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % n;
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform_real(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform_unit(rng); }

}  // namespace emseg
