#pragma once

#include <cstdint>
#include <random>

namespace devae {

using Rng = std::mt19937_64;

// splitmix64 finalizer; turns (seed, stream) into independent engine seeds so
// initialization, shuffling and noise never share a stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

enum class SeedStream : std::uint64_t { init = 1, shuffle = 2, noise = 3, split = 4, blobs = 5, pca = 6 };

inline Rng make_rng(std::uint64_t seed, SeedStream stream) {
    return Rng(derive_seed(seed, static_cast<std::uint64_t>(stream)));
}

}  // namespace devae
