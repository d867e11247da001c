#pragma once

#include <cmath>
#include <cstdint>

namespace g2s {

/// Counter-based deterministic RNG (splitmix64 over seed + counter).
///
/// The full state is (seed, counter), so a stream can be reproduced or
/// fast-forwarded by setting the counter directly. The integer path is
/// platform-exact; gaussian() goes through libm and inherits its rounding.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed, std::uint64_t counter = 0)
        : seed_(seed), counter_(counter) {}

    std::uint64_t next_u64() {
        ++counter_;
        std::uint64_t z = seed_ + counter_ * 0x9E3779B97F4A7C15ull;
        return mix64(z);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller (two draws per call, sine half discarded).
    double gaussian() {
        double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53; // (0, 1]
        double u2 = double(next_u64() >> 11) * 0x1.0p-53;       // [0, 1)
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }
    void set_counter(std::uint64_t c) { counter_ = c; }

    /// Independent stream keyed by tag; derive(a) and derive(b) do not overlap
    /// for a != b in any way that matters at this scale.
    SeededRng derive(std::uint64_t tag) const { return SeededRng(mix2(seed_, tag)); }

    static std::uint64_t mix64(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    static std::uint64_t mix2(std::uint64_t a, std::uint64_t b) {
        return mix64(a + 0x9E3779B97F4A7C15ull * mix64(b ^ 0xD1B54A32D192ED03ull));
    }

    static std::uint64_t mix3(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
        return mix2(mix2(a, b), c);
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_;
};

} // namespace g2s
