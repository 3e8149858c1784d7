#include "bch/ring.hpp"

#include "bch/errors.hpp"

#include <algorithm>

namespace bch {

SuccessorIndex::SuccessorIndex(int range_bits) : range_bits_(range_bits), buckets_(1) {
    if (range_bits < 1 || range_bits > 63) throw Error(ErrorCode::InvalidArgument, "range_bits must lie in [1, 63]");
}

std::size_t SuccessorIndex::bucket_of(std::uint64_t position) const noexcept {
    const unsigned __int128 scaled = static_cast<unsigned __int128>(position) * buckets_.size();
    return static_cast<std::size_t>(scaled >> range_bits_);
}

void SuccessorIndex::rebuild(std::size_t bucket_count) {
    std::vector<std::vector<RingPoint>> old = std::move(buckets_);
    buckets_.assign(bucket_count, {});
    for (auto& bucket : old) {
        for (const auto& p : bucket) buckets_[bucket_of(p.position)].push_back(p);
    }
    // Buckets were visited in ascending order, so each new bucket is sorted.
    ++resizes_;
}

void SuccessorIndex::insert(const RingPoint& bin_point) {
    auto& bucket = buckets_[bucket_of(bin_point.position)];
    auto it = std::lower_bound(bucket.begin(), bucket.end(), bin_point);
    if (it != bucket.end() && *it == bin_point) throw Error(ErrorCode::AlreadyPresent, "bin point already indexed");
    bucket.insert(it, bin_point);
    ++size_;
    if (size_ > 2 * buckets_.size()) rebuild(buckets_.size() * 2);
}

void SuccessorIndex::remove(const RingPoint& bin_point) {
    auto& bucket = buckets_[bucket_of(bin_point.position)];
    auto it = std::lower_bound(bucket.begin(), bucket.end(), bin_point);
    if (it == bucket.end() || *it != bin_point) throw Error(ErrorCode::NotFound, "bin point not indexed");
    bucket.erase(it);
    --size_;
    if (buckets_.size() > 1 && size_ < buckets_.size() / 4) rebuild(buckets_.size() / 2);
}

bool SuccessorIndex::contains(const RingPoint& bin_point) const {
    const auto& bucket = buckets_[bucket_of(bin_point.position)];
    return std::binary_search(bucket.begin(), bucket.end(), bin_point);
}

const RingPoint& SuccessorIndex::first_from_bucket(std::size_t start) const {
    const std::size_t t = buckets_.size();
    for (std::size_t k = 0; k < t; ++k) {
        const auto& bucket = buckets_[(start + k) % t];
        ++touched_;
        if (!bucket.empty()) return bucket.front();
    }
    throw Error(ErrorCode::EmptySystem, "no bins on the ring");
}

const RingPoint& SuccessorIndex::last_before_bucket(std::size_t start) const {
    const std::size_t t = buckets_.size();
    for (std::size_t k = 1; k <= t; ++k) {
        const auto& bucket = buckets_[(start + t - k) % t];
        if (!bucket.empty()) return bucket.back();
    }
    throw Error(ErrorCode::EmptySystem, "no bins on the ring");
}

const RingPoint& SuccessorIndex::successor(const RingPoint& point) const {
    if (size_ == 0) throw Error(ErrorCode::EmptySystem, "no bins on the ring");
    ++queries_;
    ++touched_;
    const std::size_t b = bucket_of(point.position);
    const auto& bucket = buckets_[b];
    auto it = std::lower_bound(bucket.begin(), bucket.end(), point);
    if (it != bucket.end()) return *it;
    return first_from_bucket((b + 1) % buckets_.size());
}

const RingPoint& SuccessorIndex::next_after(const RingPoint& bin_point) const {
    if (size_ == 0) throw Error(ErrorCode::EmptySystem, "no bins on the ring");
    const std::size_t b = bucket_of(bin_point.position);
    const auto& bucket = buckets_[b];
    auto it = std::upper_bound(bucket.begin(), bucket.end(), bin_point);
    if (it != bucket.end()) return *it;
    return first_from_bucket((b + 1) % buckets_.size());
}

const RingPoint& SuccessorIndex::prev_before(const RingPoint& bin_point) const {
    if (size_ == 0) throw Error(ErrorCode::EmptySystem, "no bins on the ring");
    const std::size_t b = bucket_of(bin_point.position);
    const auto& bucket = buckets_[b];
    auto it = std::lower_bound(bucket.begin(), bucket.end(), bin_point);
    if (it != bucket.begin()) return *std::prev(it);
    return last_before_bucket(b);
}

std::vector<RingPoint> SuccessorIndex::points() const {
    std::vector<RingPoint> out;
    out.reserve(size_);
    for (const auto& bucket : buckets_) out.insert(out.end(), bucket.begin(), bucket.end());
    return out;
}

}  // namespace bch
