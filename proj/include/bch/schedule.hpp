#pragma once

#include "bch/rational.hpp"
#include "bch/ring.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace bch {

// How bin capacities are derived from (m, n).
//
// Balanced: with T = ceil(c*m), the lowest T - n*floor(c*m/n) bins in the
// linear bin order get ceil(c*m/n) and the rest floor(c*m/n), for a total
// of T. When c*m < n every bin gets capacity 1 instead.
//
// Fixed: every bin has the same capacity regardless of m.
struct CapacityRule {
    Rational c{5, 4};
    std::optional<std::size_t> fixed;

    static CapacityRule balanced(Rational c);
    static CapacityRule fixed_capacity(std::size_t capacity);

    // Capacity of the bin at `rank` (0-based) in the linear bin order.
    std::size_t capacity_at(std::size_t rank, std::size_t m, std::size_t n) const;
    std::size_t total(std::size_t m, std::size_t n) const;
    // Upper bound every load must respect: ceil(c*m/n), at least 1.
    std::size_t load_cap(std::size_t m, std::size_t n) const;
    std::size_t big_bin_count(std::size_t m, std::size_t n) const;
};

struct CapacitySchedule {
    std::size_t m = 0;
    std::size_t n = 0;
    CapacityRule rule;
    std::vector<BinId> ordered_bins;
    std::vector<std::size_t> capacities;  // parallel to ordered_bins

    std::size_t total() const;
    std::size_t max_capacity() const;
    std::size_t min_capacity() const;
};

// Sorts `bins` ascending to form the linear order and evaluates the rule.
// Throws EmptySystem when the bin list is empty.
CapacitySchedule compute_schedule(std::size_t m, std::span<const BinId> bins, const CapacityRule& rule);

}  // namespace bch
