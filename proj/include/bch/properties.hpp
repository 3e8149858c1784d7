#pragma once

// Randomized property suites that compare the incremental allocator with the
// brute-force oracle. Shared by the CLI's verify command and the tests.

#include "bch/allocator.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace bch::props {

struct PropertyTally {
    std::string name;
    std::size_t checks = 0;
    std::size_t failures = 0;
    std::vector<std::string> samples;  // first few failure descriptions

    bool ok() const noexcept { return failures == 0; }
    void record(bool passed, const std::string& what);
};

struct SuiteReport {
    std::vector<PropertyTally> properties;

    PropertyTally& get(const std::string& name);
    const PropertyTally* find(const std::string& name) const;
    bool all_ok() const noexcept;
};

// Property names used in reports.
inline constexpr const char* kLoadsMatchOracle = "loads_match_oracle";
inline constexpr const char* kLoadsOrderFree = "loads_order_independent";
inline constexpr const char* kFullBinsIntervals = "full_bins_by_intervals";
inline constexpr const char* kNonfullLoadsFromRuns = "nonfull_loads_from_runs";
inline constexpr const char* kCanonicalPlacement = "canonical_placement";
inline constexpr const char* kCounters = "counters";
inline constexpr const char* kHardCap = "hard_cap";
inline constexpr const char* kSettled = "settled";
inline constexpr const char* kForwardingsOrderFree = "capacity_change_forwardings";
inline constexpr const char* kRefillBounded = "capacity_change_refill";

struct StateCheckOptions {
    std::size_t shuffles = 10;
    bool canonical = false;  // compare the whole placement with the permuted-id oracle
};

// Runs every single-state property on `state` and records the outcomes.
void check_state(const Allocator& state, const StateCheckOptions& options, std::mt19937_64& rng, SuiteReport& report);

struct SequenceConfig {
    std::size_t trials = 1000;
    std::size_t ops_per_trial = 40;
    std::size_t max_n = 16;
    std::size_t max_m = 64;
    std::uint64_t seed = 1;
    int range_bits = 10;
    ForwardPolicy policy = ForwardPolicy::NewestBall;
    HashKind hash = HashKind::Poly5;
    StateCheckOptions check;
};

// Random op sequences on small systems; check_state after every op.
SuiteReport run_sequence_suite(const SequenceConfig& config);

// Builds one random small system by a random op sequence. The epsilon is
// drawn from a short list so capacities vary.
Allocator random_small_system(std::mt19937_64& rng, ForwardPolicy policy, const SequenceConfig& config);

struct CapacityChangeConfig {
    std::size_t snapshots = 200;
    std::size_t random_orders = 5;
    std::size_t max_n = 16;
    std::size_t max_m = 64;
    std::uint64_t seed = 1;
    int range_bits = 10;
};

// Decreases one bin's capacity on random snapshots under both policies and
// several random forwarding orders; the forwarding counts must agree and the
// reverse increase must move no more balls than that.
SuiteReport run_capacity_change_suite(const CapacityChangeConfig& config);

// The complete verification run behind `bchash verify`.
SuiteReport run_all(std::size_t trials, std::size_t max_n, std::size_t max_m, std::uint64_t seed);

}  // namespace bch::props
