#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace vslct {

using Rng = std::mt19937_64;

/// Independent randomness streams derived from one run seed.
enum class Stream : std::uint64_t {
    Data = 1,
    Init = 2,
    Shuffle = 3,
    Lambda = 4,
    Subsample = 5,
    Split = 6,
};

inline Rng make_rng(std::uint64_t seed, Stream stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    return Rng(seq);
}

/// Uniform double in [0, 1) from 53 random bits; identical across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Fisher-Yates shuffle driven by raw engine output, so the permutation does
/// not depend on the standard library's distribution implementations.
template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng() % i);
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace vslct
