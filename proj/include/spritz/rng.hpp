// -*- c-basic-offset: 4; indent-tabs-mode: nil -*-
#pragma once

#include <cstdint>
#include <random>

namespace spritz {

using Rng = std::mt19937_64;

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Independent stream for a sub-component, e.g. one flow of a run.
inline uint64_t derive_seed(uint64_t seed, uint64_t stream) { return splitmix64(seed ^ splitmix64(stream + 1)); }

// Uniform double in [0, 1) from the top 53 bits; identical across standard libraries.
inline double uniform01(Rng &rng) { return double(rng() >> 11) * 0x1.0p-53; }

inline uint64_t uniform_index(Rng &rng, uint64_t n) {
    if (n <= 1)
        return 0;
    const uint64_t i = uint64_t(uniform01(rng) * double(n));
    return i < n ? i : n - 1;
}

} // namespace spritz
