#pragma once

#include <cstdint>
#include <random>

namespace ghostrec {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent random streams, one per (seed, stream tag, index).
///
/// Each stream is a fresh engine seeded from a hash of the key, so draws for
/// realization s never depend on how many other realizations ran before it or
/// on which thread ran them.
enum class StreamTag : std::uint64_t {
    source_phase = 1,
    measurement_noise = 2,
    sweep_cell = 3,
};

inline std::mt19937_64 make_stream(std::uint64_t seed, StreamTag tag, std::uint64_t index) {
    const std::uint64_t key = mix64(mix64(seed) ^ mix64(static_cast<std::uint64_t>(tag) * 0x632BE59BD9B4E019ULL) ^
                                    mix64(index + 0x2545F4914F6CDD1DULL));
    std::seed_seq seq{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(seed)};
    return std::mt19937_64(seq);
}

/// Child seed for sweep cell `cell` of a master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t cell) {
    return mix64(master ^ mix64(cell + static_cast<std::uint64_t>(StreamTag::sweep_cell)));
}

}  // namespace ghostrec
