#pragma once

// Brute-force reference allocator. Everything here is recomputed from
// scratch in O(m*n) per call with no indexes; it exists to check the
// incremental allocator, not to be fast.

#include "bch/permutation.hpp"
#include "bch/ring.hpp"

#include <cstdint>
#include <map>
#include <set>
#include <variant>
#include <vector>

namespace bch::oracle {

struct BallEntry {
    BallId id;
    std::uint64_t position;
};

struct BinEntry {
    BinId id;
    std::uint64_t position;
    std::size_t capacity;
};

struct Snapshot {
    std::vector<BallEntry> balls;
    std::vector<BinEntry> bins;
};

struct InsertionSequence {
    std::vector<BallId> order;
};

struct PermutedIdAscending {
    IdPermutation permutation;
};

using InsertionOrder = std::variant<InsertionSequence, PermutedIdAscending>;

struct Allocation {
    std::map<BallId, BinId> placement;
    std::map<BinId, std::size_t> loads;

    std::set<BinId> full_bins(const Snapshot& snapshot) const;
};

// Simple insertions in the given order: each ball walks from the bin it
// hashes to until the first non-full bin. Throws Infeasible when total
// capacity is below the ball count, InvalidArgument when an insertion
// sequence is not a permutation of the snapshot's balls.
Allocation allocate(const Snapshot& snapshot, const InsertionOrder& order);

// Number of balls hashing directly to each bin.
std::map<BinId, std::size_t> hashed_counts(const Snapshot& snapshot);

// Full bins by the interval criterion: b is full iff some run of consecutive
// bins ending at b receives at least its total capacity in directly hashed
// balls. Evaluates all O(n^2) intervals.
std::set<BinId> full_bins_by_intervals(const Snapshot& snapshot);

// Load of every non-full bin predicted from the longest run of full bins
// leading to it: balls hashing into the run and the bin, minus the run's
// capacity.
std::map<BinId, std::int64_t> nonfull_loads_from_runs(const Snapshot& snapshot, const std::set<BinId>& full);

}  // namespace bch::oracle
