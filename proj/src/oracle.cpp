#include "bch/oracle.hpp"

#include "bch/errors.hpp"

#include <algorithm>
#include <numeric>

namespace bch::oracle {

namespace {

std::vector<BinEntry> sorted_bins(const Snapshot& s) {
    std::vector<BinEntry> bins = s.bins;
    std::sort(bins.begin(), bins.end(), [](const BinEntry& a, const BinEntry& b) {
        return RingPoint::bin(a.position, a.id) < RingPoint::bin(b.position, b.id);
    });
    return bins;
}

// Index into `bins` (ring order) of the bin the ball hashes to.
std::size_t hash_index(const std::vector<BinEntry>& bins, const BallEntry& ball) {
    const RingPoint p = RingPoint::ball(ball.position, ball.id);
    for (std::size_t i = 0; i < bins.size(); ++i) {
        if (p < RingPoint::bin(bins[i].position, bins[i].id)) return i;
    }
    return 0;
}

void check_feasible(const Snapshot& s) {
    if (s.balls.empty()) return;
    if (s.bins.empty()) throw Error(ErrorCode::Infeasible, "balls present but no bins");
    std::size_t cap = 0;
    for (const auto& b : s.bins) cap += b.capacity;
    if (cap < s.balls.size()) throw Error(ErrorCode::Infeasible, "total capacity below ball count");
}

std::vector<std::size_t> hashed_by_index(const Snapshot& s, const std::vector<BinEntry>& bins) {
    std::vector<std::size_t> counts(bins.size(), 0);
    for (const auto& ball : s.balls) ++counts[hash_index(bins, ball)];
    return counts;
}

}  // namespace

std::set<BinId> Allocation::full_bins(const Snapshot& snapshot) const {
    std::set<BinId> out;
    for (const auto& bin : snapshot.bins) {
        auto it = loads.find(bin.id);
        if (it != loads.end() && it->second >= bin.capacity) out.insert(bin.id);
    }
    return out;
}

Allocation allocate(const Snapshot& snapshot, const InsertionOrder& order) {
    check_feasible(snapshot);
    const std::vector<BinEntry> bins = sorted_bins(snapshot);

    std::map<BallId, const BallEntry*> by_id;
    for (const auto& ball : snapshot.balls) by_id[ball.id] = &ball;

    std::vector<const BallEntry*> sequence;
    sequence.reserve(snapshot.balls.size());
    if (const auto* seq = std::get_if<InsertionSequence>(&order)) {
        if (seq->order.size() != snapshot.balls.size()) throw Error(ErrorCode::InvalidArgument, "insertion sequence size mismatch");
        std::set<BallId> seen;
        for (BallId id : seq->order) {
            auto it = by_id.find(id);
            if (it == by_id.end() || !seen.insert(id).second) throw Error(ErrorCode::InvalidArgument, "insertion sequence is not a permutation of the balls");
            sequence.push_back(it->second);
        }
    } else {
        const auto& perm = std::get<PermutedIdAscending>(order).permutation;
        for (const auto& ball : snapshot.balls) sequence.push_back(&ball);
        std::sort(sequence.begin(), sequence.end(), [&](const BallEntry* a, const BallEntry* b) { return perm(a->id) < perm(b->id); });
    }

    Allocation out;
    std::vector<std::size_t> load(bins.size(), 0);
    for (const BallEntry* ball : sequence) {
        std::size_t i = hash_index(bins, *ball);
        while (load[i] >= bins[i].capacity) i = (i + 1) % bins.size();
        ++load[i];
        out.placement[ball->id] = bins[i].id;
    }
    for (std::size_t i = 0; i < bins.size(); ++i) out.loads[bins[i].id] = load[i];
    return out;
}

std::map<BinId, std::size_t> hashed_counts(const Snapshot& snapshot) {
    std::map<BinId, std::size_t> out;
    const std::vector<BinEntry> bins = sorted_bins(snapshot);
    if (bins.empty()) return out;
    const auto counts = hashed_by_index(snapshot, bins);
    for (std::size_t i = 0; i < bins.size(); ++i) out[bins[i].id] = counts[i];
    return out;
}

std::set<BinId> full_bins_by_intervals(const Snapshot& snapshot) {
    check_feasible(snapshot);
    std::set<BinId> out;
    const std::vector<BinEntry> bins = sorted_bins(snapshot);
    const std::size_t n = bins.size();
    if (n == 0) return out;
    const auto counts = hashed_by_index(snapshot, bins);
    for (std::size_t end = 0; end < n; ++end) {
        std::size_t hashed = 0;
        std::size_t capacity = 0;
        for (std::size_t len = 1; len <= n; ++len) {
            const std::size_t i = (end + n - (len - 1)) % n;
            hashed += counts[i];
            capacity += bins[i].capacity;
            if (hashed >= capacity) {
                out.insert(bins[end].id);
                break;
            }
        }
    }
    return out;
}

std::map<BinId, std::int64_t> nonfull_loads_from_runs(const Snapshot& snapshot, const std::set<BinId>& full) {
    std::map<BinId, std::int64_t> out;
    const std::vector<BinEntry> bins = sorted_bins(snapshot);
    const std::size_t n = bins.size();
    if (n == 0) return out;
    const auto counts = hashed_by_index(snapshot, bins);
    for (std::size_t b = 0; b < n; ++b) {
        if (full.contains(bins[b].id)) continue;
        std::size_t hashed = counts[b];
        std::size_t run_capacity = 0;
        for (std::size_t k = 1; k < n; ++k) {
            const std::size_t i = (b + n - k) % n;
            if (!full.contains(bins[i].id)) break;
            hashed += counts[i];
            run_capacity += bins[i].capacity;
        }
        out[bins[b].id] = static_cast<std::int64_t>(hashed) - static_cast<std::int64_t>(run_capacity);
    }
    return out;
}

}  // namespace bch::oracle
