#include "bch/schedule.hpp"

#include "bch/errors.hpp"

#include <algorithm>
#include <numeric>

namespace bch {

CapacityRule CapacityRule::balanced(Rational c) {
    if (!(Rational(1, 1) < c)) throw Error(ErrorCode::InvalidArgument, "balancing parameter c must exceed 1");
    return CapacityRule{c, std::nullopt};
}

CapacityRule CapacityRule::fixed_capacity(std::size_t capacity) {
    if (capacity == 0) throw Error(ErrorCode::InvalidArgument, "fixed capacity must be at least 1");
    return CapacityRule{Rational(2, 1), capacity};
}

std::size_t CapacityRule::big_bin_count(std::size_t m, std::size_t n) const {
    if (n == 0) throw Error(ErrorCode::EmptySystem, "capacity schedule needs at least one bin");
    if (fixed || c.mul_less_than(m, n)) return 0;
    const std::uint64_t t = c.ceil_mul(m);
    return static_cast<std::size_t>(t - n * c.floor_mul_div(m, n));
}

std::size_t CapacityRule::capacity_at(std::size_t rank, std::size_t m, std::size_t n) const {
    if (n == 0) throw Error(ErrorCode::EmptySystem, "capacity schedule needs at least one bin");
    if (fixed) return *fixed;
    if (c.mul_less_than(m, n)) return 1;
    const std::size_t small = c.floor_mul_div(m, n);
    return rank < big_bin_count(m, n) ? c.ceil_mul_div(m, n) : small;
}

std::size_t CapacityRule::total(std::size_t m, std::size_t n) const {
    if (n == 0) throw Error(ErrorCode::EmptySystem, "capacity schedule needs at least one bin");
    if (fixed) return *fixed * n;
    if (c.mul_less_than(m, n)) return n;
    return c.ceil_mul(m);
}

std::size_t CapacityRule::load_cap(std::size_t m, std::size_t n) const {
    if (n == 0) throw Error(ErrorCode::EmptySystem, "capacity schedule needs at least one bin");
    if (fixed) return *fixed;
    return std::max<std::size_t>(1, c.ceil_mul_div(m, n));
}

std::size_t CapacitySchedule::total() const {
    return std::accumulate(capacities.begin(), capacities.end(), std::size_t{0});
}

std::size_t CapacitySchedule::max_capacity() const {
    return capacities.empty() ? 0 : *std::max_element(capacities.begin(), capacities.end());
}

std::size_t CapacitySchedule::min_capacity() const {
    return capacities.empty() ? 0 : *std::min_element(capacities.begin(), capacities.end());
}

CapacitySchedule compute_schedule(std::size_t m, std::span<const BinId> bins, const CapacityRule& rule) {
    if (bins.empty()) throw Error(ErrorCode::EmptySystem, "capacity schedule needs at least one bin");
    CapacitySchedule s;
    s.m = m;
    s.n = bins.size();
    s.rule = rule;
    s.ordered_bins.assign(bins.begin(), bins.end());
    std::sort(s.ordered_bins.begin(), s.ordered_bins.end());
    s.capacities.reserve(s.n);
    for (std::size_t rank = 0; rank < s.n; ++rank) s.capacities.push_back(rule.capacity_at(rank, m, s.n));
    return s;
}

}  // namespace bch
