#include "bch/hashing.hpp"

#include "bch/errors.hpp"

#include <string>

namespace bch {

HashKind parse_hash_kind(std::string_view name) {
    if (name == "poly5") return HashKind::Poly5;
    if (name == "tab") return HashKind::SimpleTabulation;
    throw Error(ErrorCode::InvalidArgument, "unknown hash kind: " + std::string(name));
}

std::string_view to_string(HashKind kind) noexcept {
    return kind == HashKind::Poly5 ? "poly5" : "tab";
}

namespace {

void check_range_bits(int range_bits) {
    if (range_bits < 1 || range_bits > 63) {
        throw Error(ErrorCode::InvalidArgument, "range_bits must lie in [1, 63], got " + std::to_string(range_bits));
    }
}

}  // namespace

HashFamily::HashFamily(HashKind kind, std::uint64_t seed, int range_bits)
    : kind_(kind), seed_(seed), range_bits_(range_bits) {
    check_range_bits(range_bits);
    SplitMix64 gen(seed);
    if (kind == HashKind::Poly5) {
        for (auto& a : coefficients_) a = Mersenne61::reduce(gen.next());
    } else {
        for (auto& table : tables_) {
            for (auto& entry : table) entry = gen.next();
        }
    }
}

HashFamily HashFamily::poly5_from_coefficients(const Coefficients& coefficients, int range_bits) {
    HashFamily family(HashKind::Poly5, 0, range_bits);
    for (std::size_t i = 0; i < kPolyTerms; ++i) family.coefficients_[i] = Mersenne61::reduce(coefficients[i]);
    return family;
}

std::uint64_t HashFamily::operator()(std::uint64_t key) const noexcept {
    if (kind_ == HashKind::Poly5) {
        const std::uint64_t v = poly_eval<Mersenne61>(coefficients_, key);
        // v is a 61-bit value; wider ranges are padded with low zero bits.
        return range_bits_ <= 61 ? v >> (61 - range_bits_) : v << (range_bits_ - 61);
    }
    std::uint64_t h = 0;
    for (std::size_t i = 0; i < 8; ++i, key >>= 8) h ^= tables_[i][key & 0xff];
    return h >> (64 - range_bits_);
}

SystemHashes derive_system_hashes(HashKind kind, std::uint64_t seed, int range_bits) {
    SplitMix64 gen(seed);
    const std::uint64_t ball_seed = gen.next();
    std::uint64_t bin_seed = gen.next();
    while (bin_seed == ball_seed) bin_seed = gen.next();
    const std::uint64_t perm_seed = gen.next();
    return SystemHashes{HashFamily(kind, ball_seed, range_bits), HashFamily(kind, bin_seed, range_bits), perm_seed};
}

}  // namespace bch
