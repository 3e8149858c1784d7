#pragma once

#include "bch/hashing.hpp"
#include "bch/ring.hpp"

#include <map>
#include <span>

namespace bch {

// Plain consistent hashing without capacities: a ball belongs to the first
// bin at or after its point. Uses the same hash families and tie-breaking as
// Allocator built from the same (kind, seed, range_bits).
class PlainRing {
public:
    PlainRing(HashKind kind, std::uint64_t seed, int range_bits = HashFamily::kDefaultRangeBits);

    void add_bin(BinId id);
    void remove_bin(BinId id);
    std::size_t bin_count() const noexcept { return index_.size(); }

    BinId assign(BallId ball) const;
    // Load of every bin when the given balls are assigned.
    std::map<BinId, std::size_t> loads(std::span<const BallId> balls) const;

private:
    SystemHashes hashes_;
    SuccessorIndex index_;
};

}  // namespace bch
