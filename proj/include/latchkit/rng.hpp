#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace latchkit {

// Sampling helpers on top of mt19937_64. The std::*_distribution adaptors are
// implementation-defined, which would break bit-reproducible runs across
// standard libraries, so the conversions are spelled out here.

/// Uniform double in [0, 1) with 53-bit resolution.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in (0, 1]; safe as a log() argument.
inline double uniform01_open_low(std::mt19937_64& rng) {
    return 1.0 - uniform01(rng);
}

/// Uniform double in [lo, hi).
inline double uniform_range(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * uniform01(rng);
}

/// Uniform integer in [0, n). n must be >= 1.
inline std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n) {
    // Modulo bias is below 2^-40 for any n this library draws; acceptable.
    return rng() % n;
}

/// Exponential with the given mean.
inline double exponential_sample(std::mt19937_64& rng, double mean) {
    return -mean * std::log(uniform01_open_low(rng));
}

/// Pareto with survival (x_min/t)^alpha for t >= x_min.
inline double pareto_sample(std::mt19937_64& rng, double alpha, double x_min) {
    return x_min * std::pow(uniform01_open_low(rng), -1.0 / alpha);
}

}  // namespace latchkit
