#pragma once

#include <cstdint>

namespace bch {

// pi(x) = (a*x + b) mod p over the prime p = 2^64 - 59. A bijection on
// [0, p), so distinct ids below p get distinct priorities.
class IdPermutation {
public:
    static constexpr std::uint64_t prime = 18446744073709551557ULL;

    IdPermutation(std::uint64_t a, std::uint64_t b);
    static IdPermutation from_seed(std::uint64_t seed);

    std::uint64_t operator()(std::uint64_t id) const noexcept {
        const unsigned __int128 v = static_cast<unsigned __int128>(a_) * id + b_;
        return static_cast<std::uint64_t>(v % prime);
    }

    std::uint64_t a() const noexcept { return a_; }
    std::uint64_t b() const noexcept { return b_; }

private:
    std::uint64_t a_;
    std::uint64_t b_;
};

}  // namespace bch
