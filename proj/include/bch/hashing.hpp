#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace bch {

// SplitMix64. Every seed expansion in the library goes through this
// generator so tables and coefficients are reproducible bit for bit.
class SplitMix64 {
public:
    explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    constexpr std::uint64_t next() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

// Arithmetic in GF(2^61 - 1).
struct Mersenne61 {
    static constexpr std::uint64_t modulus = (std::uint64_t{1} << 61) - 1;

    static constexpr std::uint64_t reduce(std::uint64_t x) noexcept {
        x = (x & modulus) + (x >> 61);
        return x >= modulus ? x - modulus : x;
    }

    static constexpr std::uint64_t mul(std::uint64_t a, std::uint64_t b) noexcept {
        const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
        const std::uint64_t lo = static_cast<std::uint64_t>(p) & modulus;
        const std::uint64_t hi = static_cast<std::uint64_t>(p >> 61);
        return reduce(lo + hi);
    }

    static constexpr std::uint64_t add(std::uint64_t a, std::uint64_t b) noexcept { return reduce(a + b); }
};

// Small prime field, used to check the polynomial construction exhaustively.
template <std::uint64_t P>
struct PrimeField {
    static constexpr std::uint64_t modulus = P;
    static constexpr std::uint64_t reduce(std::uint64_t x) noexcept { return x % P; }
    static constexpr std::uint64_t mul(std::uint64_t a, std::uint64_t b) noexcept { return (a * b) % P; }
    static constexpr std::uint64_t add(std::uint64_t a, std::uint64_t b) noexcept { return (a + b) % P; }
};

// Horner evaluation; coefficients run from the highest degree down to the
// constant term.
template <class Field, std::size_t K>
constexpr std::uint64_t poly_eval(const std::array<std::uint64_t, K>& coefficients, std::uint64_t key) noexcept {
    const std::uint64_t x = Field::reduce(key);
    std::uint64_t acc = 0;
    for (std::uint64_t a : coefficients) acc = Field::add(Field::mul(acc, x), a);
    return acc;
}

enum class HashKind { Poly5, SimpleTabulation };

HashKind parse_hash_kind(std::string_view name);
std::string_view to_string(HashKind kind) noexcept;

// A seeded hash function from 64-bit keys into [0, 2^range_bits).
//
// Poly5 is a degree-4 polynomial over GF(2^61 - 1) (5-independent); the top
// range_bits of the 61-bit field value form the position. SimpleTabulation
// XORs eight byte-indexed tables of 64-bit words and keeps the top bits.
// Immutable after construction.
class HashFamily {
public:
    static constexpr int kDefaultRangeBits = 32;
    static constexpr std::size_t kPolyTerms = 5;
    using Coefficients = std::array<std::uint64_t, kPolyTerms>;
    using Table = std::array<std::uint64_t, 256>;

    HashFamily(HashKind kind, std::uint64_t seed, int range_bits = kDefaultRangeBits);

    // Poly5 family with explicit coefficients (highest degree first).
    static HashFamily poly5_from_coefficients(const Coefficients& coefficients, int range_bits);

    std::uint64_t operator()(std::uint64_t key) const noexcept;

    HashKind kind() const noexcept { return kind_; }
    std::uint64_t seed() const noexcept { return seed_; }
    int range_bits() const noexcept { return range_bits_; }
    std::uint64_t range() const noexcept { return std::uint64_t{1} << range_bits_; }

    const Coefficients& coefficients() const noexcept { return coefficients_; }
    std::span<const Table, 8> tables() const noexcept { return tables_; }

private:
    HashKind kind_;
    std::uint64_t seed_;
    int range_bits_;
    Coefficients coefficients_{};
    std::array<Table, 8> tables_{};
};

// The ball family, the bin family and the permutation seed one system uses,
// all derived from a single seed. The two families always get distinct seeds.
struct SystemHashes {
    HashFamily balls;
    HashFamily bins;
    std::uint64_t permutation_seed;
};

SystemHashes derive_system_hashes(HashKind kind, std::uint64_t seed, int range_bits);

}  // namespace bch
