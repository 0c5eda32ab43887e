#pragma once

#include <cstdint>
#include <random>

namespace thal {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic derived stream: the same (seed, ids) always yields the same
// engine, so per-row / per-agent work can run in any order or in parallel
// without changing results.
inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t id0 = 0,
                                   std::uint64_t id1 = 0, std::uint64_t id2 = 0) {
    std::uint64_t s = splitmix64(seed);
    s = splitmix64(s ^ (0xa0761d6478bd642fULL + id0));
    s = splitmix64(s ^ (0xe7037ed1a0b428dbULL + id1));
    s = splitmix64(s ^ (0x8ebc6af09c88c6e3ULL + id2));
    return std::mt19937_64(s);
}

inline double uniform01(std::mt19937_64& rng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

}  // namespace thal
