#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace hfp {

// Stream purposes. Part of the RNG key, so the numeric values are frozen:
// renumbering changes every generated dataset.
enum class RngPurpose : std::uint64_t {
    density = 1,
    rhs = 2,
    probes = 3,
    factor_init = 4,
    net_weights = 5,
    power_iter = 6,
    test = 7,
};

namespace detail {

// SplitMix64 finalizer: full-avalanche 64-bit mix.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace detail

// Counter-based random stream keyed by (seed, frame, purpose, counter).
// The value at counter c is a pure function of the key, so draws are
// reproducible independent of draw order, thread count, and platform.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t frame, RngPurpose purpose)
        : key_(detail::mix64(detail::mix64(detail::mix64(seed) ^ frame) ^
                             static_cast<std::uint64_t>(purpose))) {}

    std::uint64_t next_bits() { return detail::mix64(key_ ^ counter_++); }

    // Uniform in [0, 1) with 53 random bits.
    double next_uniform() {
        return static_cast<double>(next_bits() >> 11) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_uniform();
    }

    // Uniform integer in [0, n) via 128-bit multiply (no modulo bias).
    std::uint64_t next_below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_bits()) * n) >> 64);
    }

    // Standard normal via Box-Muller, one variate per 64-bit draw.
    double next_normal() {
        const std::uint64_t bits = next_bits();
        // u1 in (0,1] keeps the log finite; u2 in [0,1).
        const double u1 =
            (static_cast<double>(bits >> 32) + 1.0) * 0x1.0p-32;
        const double u2 =
            static_cast<double>(bits & 0xFFFFFFFFULL) * 0x1.0p-32;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    void fill_normal(std::span<double> out) {
        for (double& x : out) x = next_normal();
    }

    std::vector<double> normal_vector(std::size_t n) {
        std::vector<double> v(n);
        fill_normal(v);
        return v;
    }

    std::uint64_t counter() const { return counter_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace hfp
