#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace llmceg {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent stream seeds from one user seed.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Seed for a named sub-stream (e.g. "shuffle", "noise") of a base seed.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view stream) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a over the tag
    for (char c : stream) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ULL;
    }
    return mix64(base ^ mix64(h));
}

}  // namespace llmceg
