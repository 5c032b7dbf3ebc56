#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ndtx {

// Every stochastic operation takes an explicit Rng. Seeds for sub-tasks are
// derived from a master seed with child_seed(), never from wall-clock time.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// 64-bit FNV-1a over a byte string.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

/// Child seed for (master, purpose tag, index):
///   splitmix64(splitmix64(master ^ fnv1a64(tag)) + index)
/// Distinct tags keep e.g. split seeds and training seeds for the same index
/// statistically independent.
constexpr std::uint64_t child_seed(std::uint64_t master, std::string_view tag,
                                   std::uint64_t index) noexcept {
    return splitmix64(splitmix64(master ^ fnv1a64(tag)) + index);
}

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

}  // namespace ndtx
