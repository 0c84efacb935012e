#pragma once

#include <cstdint>
#include <string_view>

namespace codedchain {

/// splitmix64. Used everywhere randomness must be reproducible bit-for-bit
/// across platforms and standard library versions.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, n), n > 0. Rejection-free modulo is fine at our scales.
    std::uint64_t below(std::uint64_t n) { return next() % n; }

    /// Uniform in (0, 1].
    double unit() {
        double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return 1.0 - u;
    }

    /// Independent substream labeled by purpose.
    Rng fork(std::string_view label) const {
        std::uint64_t h = 0xcbf29ce484222325ULL ^ state;
        for (char ch : label) h = (h ^ static_cast<std::uint8_t>(ch)) * 0x100000001b3ULL;
        return Rng(h);
    }
};

}  // namespace codedchain
