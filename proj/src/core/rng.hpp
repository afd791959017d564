#pragma once

#include <cstdint>
#include <random>

namespace kplane {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent deterministic stream for (seed, index...) tuples.
template <typename... Ts>
std::mt19937_64 derived_rng(std::uint64_t seed, Ts... indices) {
    std::uint64_t s = splitmix64(seed);
    ((s = splitmix64(s ^ static_cast<std::uint64_t>(indices))), ...);
    return std::mt19937_64(s);
}

}  // namespace kplane
