#pragma once

#include <cstdint>
#include <random>

namespace qtrade {

/// Seedable deterministic random source. All stochastic operations take one
/// of these explicitly; there is no ambient randomness anywhere in the
/// library. Uniform mappings are derived from the raw mt19937_64 stream by
/// hand because the standard <random> distributions are not guaranteed to
/// produce identical sequences across implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in {0, ..., n-1}, unbiased via rejection.
    int uniform_int(int n) {
        const auto bound = static_cast<std::uint64_t>(n);
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return static_cast<int>(x % bound);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace qtrade
