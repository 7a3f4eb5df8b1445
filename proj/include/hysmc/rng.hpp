#pragma once

#include <cstdint>

namespace hysmc {

/* Splittable counter-style generator (SplitMix64 core). Every
 * (master seed, stream index) pair yields an independent stream, so
 * trajectory i can be drawn -- or replayed -- in isolation regardless of
 * which thread runs it or in which order. Output is identical across
 * platforms; no std::random distribution machinery is involved. */
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), state_(seed) {}

    /* Independent stream for logical index `index` under `master`. */
    static RngStream substream(std::uint64_t master, std::uint64_t index) {
        return RngStream(mix(mix(master) ^ mix(index + 0x9E3779B97F4A7C15ull)));
    }

    /* Seed this stream was constructed with; stored on trajectories for replay. */
    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        return mix(state_);
    }

    /* Uniform in [0, 1), 53-bit resolution. */
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /* Uniform in the open interval (0, 1). */
    double next_open_unit() {
        for (;;) {
            double u = next_unit();
            if (u > 0.0) return u;
        }
    }

    /* Uniform in the open interval (lo, hi). */
    double uniform_open(double lo, double hi) {
        for (;;) {
            double x = lo + (hi - lo) * next_unit();
            if (x > lo && x < hi) return x;
        }
    }

    /* Unbiased uniform draw from {0, ..., n-1}; n >= 1. */
    std::uint32_t next_below(std::uint32_t n) {
        // Lemire's multiply-shift with rejection.
        std::uint64_t x = next_u64() >> 32;
        std::uint64_t m = x * n;
        std::uint32_t low = static_cast<std::uint32_t>(m);
        if (low < n) {
            std::uint32_t threshold = (0u - n) % n;
            while (low < threshold) {
                x = next_u64() >> 32;
                m = x * n;
                low = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t seed_;
    std::uint64_t state_;
};

}  // namespace hysmc
