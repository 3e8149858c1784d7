#pragma once

// Draws that depend only on the raw mt19937_64 stream, so results are the
// same across standard library implementations.

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace bch {

inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t k) {
    const std::uint64_t threshold = (0 - k) % k;
    while (true) {
        const std::uint64_t x = rng();
        if (x >= threshold) return x % k;
    }
}

template <class T>
void fisher_yates(std::vector<T>& items, std::mt19937_64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[uniform_below(rng, i)]);
}

}  // namespace bch
