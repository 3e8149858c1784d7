#pragma once

#include <compare>
#include <cstdint>
#include <vector>

namespace bch {

using BallId = std::uint64_t;
using BinId = std::uint64_t;

enum class PointKind : std::uint8_t { Ball = 0, Bin = 1 };

// A hashed point on the cycle [0, r). The total order is position first,
// then balls before bins at the same position, then ascending id. Bins that
// collide are therefore filled bottom-up.
struct RingPoint {
    std::uint64_t position = 0;
    PointKind kind = PointKind::Ball;
    std::uint64_t id = 0;

    friend auto operator<=>(const RingPoint&, const RingPoint&) = default;

    static RingPoint ball(std::uint64_t position, BallId id) { return {position, PointKind::Ball, id}; }
    static RingPoint bin(std::uint64_t position, BinId id) { return {position, PointKind::Bin, id}; }
};

// Walking forward from just after `anchor`, does `a` come strictly before `b`?
// Neither argument may equal the anchor unless it is meant to sort last.
inline bool cyclic_before(const RingPoint& anchor, const RingPoint& a, const RingPoint& b) noexcept {
    const bool a_wrapped = !(anchor < a);
    const bool b_wrapped = !(anchor < b);
    if (a_wrapped != b_wrapped) return !a_wrapped;
    return a < b;
}

// Bucketed successor lookup over the bin points of the cycle. Bucket i holds
// the bins with position in [i*r/t, (i+1)*r/t), sorted. The bucket count t
// tracks the bin count through doubling and halving.
class SuccessorIndex {
public:
    explicit SuccessorIndex(int range_bits);

    void insert(const RingPoint& bin_point);
    void remove(const RingPoint& bin_point);
    bool contains(const RingPoint& bin_point) const;

    // First bin at or after `point` in cyclic order. Throws EmptySystem.
    const RingPoint& successor(const RingPoint& point) const;
    // First bin strictly after `bin_point`; the bin itself when it is alone.
    const RingPoint& next_after(const RingPoint& bin_point) const;
    // Last bin strictly before `bin_point`; the bin itself when it is alone.
    const RingPoint& prev_before(const RingPoint& bin_point) const;

    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }
    std::size_t bucket_count() const noexcept { return buckets_.size(); }
    std::size_t resize_count() const noexcept { return resizes_; }
    int range_bits() const noexcept { return range_bits_; }

    // Buckets inspected by successor queries since construction.
    std::uint64_t buckets_touched() const noexcept { return touched_; }
    std::uint64_t queries() const noexcept { return queries_; }

    // All bins in ascending order.
    std::vector<RingPoint> points() const;

private:
    std::size_t bucket_of(std::uint64_t position) const noexcept;
    void rebuild(std::size_t bucket_count);
    const RingPoint& first_from_bucket(std::size_t start) const;
    const RingPoint& last_before_bucket(std::size_t start) const;

    int range_bits_;
    std::vector<std::vector<RingPoint>> buckets_;
    std::size_t size_ = 0;
    std::size_t resizes_ = 0;
    mutable std::uint64_t touched_ = 0;
    mutable std::uint64_t queries_ = 0;
};

}  // namespace bch
