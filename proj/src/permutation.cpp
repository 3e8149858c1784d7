#include "bch/permutation.hpp"

#include "bch/errors.hpp"
#include "bch/hashing.hpp"

namespace bch {

IdPermutation::IdPermutation(std::uint64_t a, std::uint64_t b) : a_(a), b_(b) {
    if (a == 0 || a >= prime || b >= prime) throw Error(ErrorCode::InvalidArgument, "permutation requires a in [1, p) and b in [0, p)");
}

IdPermutation IdPermutation::from_seed(std::uint64_t seed) {
    SplitMix64 gen(seed);
    std::uint64_t a = 0;
    while (a == 0 || a >= prime) a = gen.next();
    std::uint64_t b = prime;
    while (b >= prime) b = gen.next();
    return IdPermutation(a, b);
}

}  // namespace bch
