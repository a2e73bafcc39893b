#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace spritecheck {

// SplitMix64 (Steele, Lea & Flood). Portable and bit-reproducible; the
// distributions below are defined here rather than borrowed from <random>,
// whose distribution algorithms differ between standard libraries.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n) { return next() % n; }
    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    SplitMix64 split() { return SplitMix64(next()); }

    [[nodiscard]] std::uint64_t state() const { return state_; }
    friend bool operator==(const SplitMix64&, const SplitMix64&) = default;

private:
    std::uint64_t state_;
};

inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

// Stateless hash of a few integers, for per-pixel deterministic noise.
inline std::uint64_t hash_mix(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
    SplitMix64 g(a ^ (b * 0x9E3779B97F4A7C15ULL) ^ (c * 0xC2B2AE3D27D4EB4FULL));
    return g.next();
}

}  // namespace spritecheck
