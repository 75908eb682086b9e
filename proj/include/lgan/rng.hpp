#pragma once

#include <cmath>
#include <cstdint>

namespace lgan {

// Counter-based deterministic generator (splitmix64 finalizer over
// seed + counter). The value at position i depends only on (seed, i), so
// parallel consumers can draw disjoint index ranges and still reproduce the
// sequential stream bit-for-bit. Not cryptographic.
struct RngState {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    RngState() = default;
    explicit RngState(std::uint64_t s) : seed(s), counter(0) {}

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    // Value at absolute stream position i; does not advance the counter.
    std::uint64_t at(std::uint64_t i) const {
        return mix(seed + (i + 1) * 0x9E3779B97F4A7C15ull);
    }

    std::uint64_t next_u64() { return at(counter++); }

    // Advance past n draws consumed externally (e.g. a parallel kernel that
    // indexed positions [counter, counter+n) itself).
    void skip(std::uint64_t n) { counter += n; }

    // Derived stream with an independent seed; used to hand non-overlapping
    // streams to subsystems (init, shuffle, dropout, synthesis, ...).
    RngState fork(std::uint64_t stream_id) const {
        return RngState(mix(seed ^ mix(stream_id + 0x632BE59BD9B4E019ull)));
    }

    // Uniform in [0,1) with 24 bits of mantissa entropy.
    float next_float() { return static_cast<float>(next_u64() >> 40) * 0x1.0p-24f; }

    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0,n). Modulo bias is irrelevant here; what matters
    // is that the mapping is fixed.
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; consumes two draws.
    double next_normal() {
        double u1 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }
};

// Stateless per-index dropout draw so parallel loops can evaluate mask
// elements in any order. Keep probability compared against 24-bit uniform.
inline bool dropout_keep(std::uint64_t seed, std::uint64_t index, float rate) {
    const std::uint64_t v = RngState::mix(seed + (index + 1) * 0x9E3779B97F4A7C15ull);
    return static_cast<float>(v >> 40) * 0x1.0p-24f >= rate;
}

} // namespace lgan
