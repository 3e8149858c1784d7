#include "bch/baseline.hpp"

#include "bch/errors.hpp"

namespace bch {

PlainRing::PlainRing(HashKind kind, std::uint64_t seed, int range_bits)
    : hashes_(derive_system_hashes(kind, seed, range_bits)), index_(range_bits) {}

void PlainRing::add_bin(BinId id) { index_.insert(RingPoint::bin(hashes_.bins(id), id)); }

void PlainRing::remove_bin(BinId id) { index_.remove(RingPoint::bin(hashes_.bins(id), id)); }

BinId PlainRing::assign(BallId ball) const {
    if (index_.empty()) throw Error(ErrorCode::EmptySystem, "plain ring has no bins");
    return index_.successor(RingPoint::ball(hashes_.balls(ball), ball)).id;
}

std::map<BinId, std::size_t> PlainRing::loads(std::span<const BallId> balls) const {
    std::map<BinId, std::size_t> out;
    for (const auto& p : index_.points()) out[p.id] = 0;
    for (BallId b : balls) ++out[assign(b)];
    return out;
}

}  // namespace bch
