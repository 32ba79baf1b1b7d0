#pragma once

#include <cstdint>
#include <random>

namespace llsh {

// splitmix64 finalizer (Steele et al.), used to spread seed bits and to
// derive independent per-worker streams from one master seed.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Deterministic sub-seed for worker `index` of a task seeded with `master`.
/// Results must not depend on which thread runs which index, so every
/// parallel loop draws its randomness from derive_seed(master, index).
inline uint64_t derive_seed(uint64_t master, uint64_t index) {
    return splitmix64(master ^ splitmix64(index + 1));
}

inline std::mt19937_64 make_engine(uint64_t seed) {
    return std::mt19937_64(splitmix64(seed));
}

}  // namespace llsh
