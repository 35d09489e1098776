#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace bdtsim {

// Counter-based pseudorandom streams built on the splitmix64 finalizer.
// Every stream is a pure function of (key, counter), so any draw in a
// simulation can be reproduced in isolation from its derivation path.

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

// Fold an ordered list of integers into a stream key.
constexpr std::uint64_t derive_key(std::uint64_t seed) { return mix64(seed + kGolden); }

template <typename... Rest>
constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t part, Rest... rest) {
    return derive_key(mix64(seed + kGolden) ^ part, rest...);
}

class RngStream {
public:
    explicit RngStream(std::uint64_t key) : key_(key) {}

    template <typename... Parts>
    static RngStream from(std::uint64_t seed, Parts... parts) {
        return RngStream(derive_key(seed, static_cast<std::uint64_t>(parts)...));
    }

    std::uint64_t next_u64() { return mix64(key_ + (++counter_) * kGolden); }

    // Uniform in (0,1]; never returns 0 so log() is safe.
    double uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via the Box-Muller transform (exact, no CLT sums).
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace bdtsim
