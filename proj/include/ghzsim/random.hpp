// Seeding helpers. Every random stream in the toolkit is an mt19937_64 whose
// seed is derived from (master seed, stream index), so results never depend
// on thread scheduling.
#pragma once

#include <cstdint>
#include <random>

namespace ghz {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t kDefaultSeed = 0xC5CADE;

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
    return mix64(mix64(master) ^ mix64(stream + 0x632BE59BD9B4E019ull));
}

inline Rng make_rng(std::uint64_t master, std::uint64_t stream) {
    return Rng(derive_seed(master, stream));
}

}  // namespace ghz
