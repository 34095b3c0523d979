#pragma once

#include <cstdint>

namespace kge {

// SplitMix64 step. Used for seeding and for the counter-based embedding
// initializer; bijective on 64-bit words.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// xoroshiro128++ stream generator. The 16-byte state is what checkpoints
// persist, so resumed runs continue the exact sample sequence.
struct RngState {
    std::uint64_t s0 = 0;
    std::uint64_t s1 = 0;

    static RngState from_seed(std::uint64_t seed) {
        RngState r;
        r.s0 = splitmix64(seed);
        r.s1 = splitmix64(r.s0 ^ seed);
        if (r.s0 == 0 && r.s1 == 0) r.s1 = 0x9e3779b97f4a7c15ULL;
        return r;
    }

    // Independent stream keyed by (seed, stream); used for per-epoch shuffles
    // so batch order does not depend on how many samples were drawn before.
    static RngState keyed(std::uint64_t seed, std::uint64_t stream) {
        return from_seed(splitmix64(seed) ^ splitmix64(stream * 0xd1342543de82ef95ULL + 1));
    }

    std::uint64_t next() {
        auto rotl = [](std::uint64_t v, int k) {
            return (v << k) | (v >> (64 - k));
        };
        const std::uint64_t a = s0;
        std::uint64_t b = s1;
        const std::uint64_t out = rotl(a + b, 17) + a;
        b ^= a;
        s0 = rotl(a, 49) ^ b ^ (b << 21);
        s1 = rotl(b, 28);
        return out;
    }

    // Uniform in [0, n). Modulo bias is ~n/2^64, irrelevant at vocabulary scale.
    std::uint64_t uniform_index(std::uint64_t n) { return next() % n; }

    bool coin() { return (next() & 1u) != 0; }

    double uniform_real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Deterministic per-cell embedding initializer key. Same (seed, matrix, row,
// col) always yields the same draw, independent of fill order or thread count.
enum class MatrixKind : std::uint64_t { Entity = 1, Relation = 2 };

inline double init_unit_draw(std::uint64_t seed, MatrixKind matrix,
                             std::uint64_t row, std::uint64_t col) {
    std::uint64_t h = splitmix64(seed ^ (static_cast<std::uint64_t>(matrix) *
                                         0x9e3779b97f4a7c15ULL));
    h = splitmix64(h + row * 0xd1342543de82ef95ULL);
    h = splitmix64(h + col * 0xaf251af3b0f025b5ULL);
    return static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
}

}  // namespace kge
