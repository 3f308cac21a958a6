// Seeded random streams. Every task derives its own stream from (master seed,
// task index), so results do not depend on how tasks are scheduled.
#pragma once

#include <cstdint>
#include <random>

namespace affwalk {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline Rng make_stream(std::uint64_t master_seed, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(master_seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL)));
}

/// Sub-stream for a named purpose inside a task (e.g. "fresh increments" vs "walk").
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
    return splitmix64(seed ^ splitmix64(salt));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

inline double standard_normal(Rng& rng) { return std::normal_distribution<double>(0.0, 1.0)(rng); }

}  // namespace affwalk
