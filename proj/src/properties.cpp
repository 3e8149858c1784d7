#include "bch/properties.hpp"

#include "bch/errors.hpp"
#include "bch/oracle.hpp"
#include "bch/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace bch::props {

void PropertyTally::record(bool passed, const std::string& what) {
    ++checks;
    if (passed) return;
    ++failures;
    if (samples.size() < 5) samples.push_back(what);
}

PropertyTally& SuiteReport::get(const std::string& name) {
    for (auto& p : properties) {
        if (p.name == name) return p;
    }
    properties.push_back(PropertyTally{name, 0, 0, {}});
    return properties.back();
}

const PropertyTally* SuiteReport::find(const std::string& name) const {
    for (const auto& p : properties) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

bool SuiteReport::all_ok() const noexcept {
    return std::all_of(properties.begin(), properties.end(), [](const PropertyTally& p) { return p.ok(); });
}

namespace {

std::size_t at_or_zero(const std::map<BinId, std::size_t>& m, BinId id) {
    auto it = m.find(id);
    return it == m.end() ? 0 : it->second;
}

bool same_loads(const oracle::Snapshot& snap, const std::map<BinId, std::size_t>& a,
                const std::map<BinId, std::size_t>& b) {
    for (const auto& bin : snap.bins) {
        if (at_or_zero(a, bin.id) != at_or_zero(b, bin.id)) return false;
    }
    return true;
}

void merge(SuiteReport& into, const SuiteReport& from) {
    for (const auto& p : from.properties) {
        PropertyTally& t = into.get(p.name);
        t.checks += p.checks;
        t.failures += p.failures;
        for (const auto& s : p.samples) {
            if (t.samples.size() < 5) t.samples.push_back(s);
        }
    }
}

enum class OpKind { InsertBall, DeleteBall, AddBin, RemoveBin };

struct Op {
    OpKind kind;
    std::uint64_t id;
};

// A random legal op script; sizes stay within the configured bounds.
std::vector<Op> random_script(std::mt19937_64& rng, std::size_t length, std::size_t max_n, std::size_t max_m) {
    std::vector<std::uint64_t> balls, bins;
    std::vector<Op> script;
    const std::uint64_t ball_pool = 4 * max_m + 1;
    const std::uint64_t bin_pool = 4 * max_n + 1;
    auto fresh = [&](std::vector<std::uint64_t>& present, std::uint64_t pool) {
        while (true) {
            const std::uint64_t id = uniform_below(rng, pool);
            if (std::find(present.begin(), present.end(), id) == present.end()) return id;
        }
    };
    auto take = [&](std::vector<std::uint64_t>& present) {
        const std::size_t i = uniform_below(rng, present.size());
        const std::uint64_t id = present[i];
        present[i] = present.back();
        present.pop_back();
        return id;
    };
    while (script.size() < length) {
        std::vector<std::pair<OpKind, unsigned>> options;
        if (!bins.empty() && balls.size() < max_m) options.push_back({OpKind::InsertBall, 6});
        if (!balls.empty()) options.push_back({OpKind::DeleteBall, 3});
        if (bins.size() < max_n) options.push_back({OpKind::AddBin, bins.empty() ? 1u : 2u});
        if (bins.size() > 1 || (bins.size() == 1 && balls.empty())) options.push_back({OpKind::RemoveBin, 1});
        unsigned total = 0;
        for (const auto& o : options) total += o.second;
        std::uint64_t pick = uniform_below(rng, total);
        OpKind kind = options.back().first;
        for (const auto& o : options) {
            if (pick < o.second) {
                kind = o.first;
                break;
            }
            pick -= o.second;
        }
        switch (kind) {
            case OpKind::InsertBall: {
                const auto id = fresh(balls, ball_pool);
                balls.push_back(id);
                script.push_back({kind, id});
                break;
            }
            case OpKind::DeleteBall: script.push_back({kind, take(balls)}); break;
            case OpKind::AddBin: {
                const auto id = fresh(bins, bin_pool);
                bins.push_back(id);
                script.push_back({kind, id});
                break;
            }
            case OpKind::RemoveBin: script.push_back({kind, take(bins)}); break;
        }
    }
    return script;
}

void apply(Allocator& a, const Op& op) {
    switch (op.kind) {
        case OpKind::InsertBall: a.insert_ball(op.id); break;
        case OpKind::DeleteBall: a.delete_ball(op.id); break;
        case OpKind::AddBin: a.add_bin(op.id); break;
        case OpKind::RemoveBin: a.remove_bin(op.id); break;
    }
}

const char* op_name(OpKind k) {
    switch (k) {
        case OpKind::InsertBall: return "insert_ball";
        case OpKind::DeleteBall: return "delete_ball";
        case OpKind::AddBin: return "add_bin";
        case OpKind::RemoveBin: return "remove_bin";
    }
    return "?";
}

constexpr std::uint64_t kEpsilonTenths[] = {1, 3, 5, 10, 20};

AllocatorConfig small_config(std::mt19937_64& rng, ForwardPolicy policy, HashKind hash, int range_bits) {
    AllocatorConfig cfg;
    const std::uint64_t tenths = kEpsilonTenths[uniform_below(rng, std::size(kEpsilonTenths))];
    cfg.rule = CapacityRule::balanced(Rational(10 + tenths, 10));
    cfg.hash = hash;
    cfg.seed = rng();
    cfg.range_bits = range_bits;
    cfg.policy = policy;
    return cfg;
}

}  // namespace

void check_state(const Allocator& state, const StateCheckOptions& options, std::mt19937_64& rng, SuiteReport& report) {
    const SettledReport settled = state.verify_settled();
    const std::string first_problem = settled.problems.empty() ? "" : settled.problems.front();
    report.get(kSettled).record(settled.invariant1_ok && settled.capacities_ok && settled.schedule_ok, first_problem);
    report.get(kCounters).record(settled.counters_ok, first_problem);

    const auto loads = state.loads();
    bool under_cap = settled.max_load_ok;
    for (const auto& [id, load] : loads) under_cap = under_cap && load <= state.load_cap();
    report.get(kHardCap).record(under_cap, fmt::format("max load {} above cap {}", state.max_load(), state.load_cap()));

    if (state.bin_count() == 0) return;

    const oracle::Snapshot snap = state.snapshot();
    std::vector<BallId> order;
    for (const auto& b : snap.balls) order.push_back(b.id);
    const oracle::Allocation reference = oracle::allocate(snap, oracle::InsertionSequence{order});
    report.get(kLoadsMatchOracle)
        .record(same_loads(snap, loads, reference.loads),
                fmt::format("m={} n={}: loads differ from id-order simple insertions", snap.balls.size(), snap.bins.size()));

    bool order_free = true;
    for (std::size_t s = 0; s < options.shuffles; ++s) {
        fisher_yates(order, rng);
        const oracle::Allocation shuffled = oracle::allocate(snap, oracle::InsertionSequence{order});
        order_free = order_free && same_loads(snap, shuffled.loads, reference.loads);
    }
    report.get(kLoadsOrderFree).record(order_free, "insertion order changed the oracle loads");

    std::set<BinId> full;
    for (const auto& bin : snap.bins) {
        if (at_or_zero(loads, bin.id) >= bin.capacity) full.insert(bin.id);
    }
    const std::set<BinId> by_intervals = oracle::full_bins_by_intervals(snap);
    report.get(kFullBinsIntervals)
        .record(full == by_intervals && full == reference.full_bins(snap), "full-bin sets disagree");

    const auto predicted = oracle::nonfull_loads_from_runs(snap, by_intervals);
    bool runs_ok = true;
    for (const auto& bin : snap.bins) {
        if (full.contains(bin.id)) continue;
        auto it = predicted.find(bin.id);
        runs_ok = runs_ok && it != predicted.end() && it->second == static_cast<std::int64_t>(at_or_zero(loads, bin.id));
    }
    report.get(kNonfullLoadsFromRuns).record(runs_ok, "non-full load differs from its run prediction");

    if (options.canonical) {
        const oracle::Allocation canonical = oracle::allocate(snap, oracle::PermutedIdAscending{state.permutation()});
        report.get(kCanonicalPlacement)
            .record(canonical.placement == state.placement(),
                    fmt::format("m={} n={}: placement differs from permuted-id order", snap.balls.size(), snap.bins.size()));
    }
}

Allocator random_small_system(std::mt19937_64& rng, ForwardPolicy policy, const SequenceConfig& config) {
    Allocator a(small_config(rng, policy, config.hash, config.range_bits));
    for (const Op& op : random_script(rng, config.ops_per_trial, config.max_n, config.max_m)) apply(a, op);
    return a;
}

SuiteReport run_sequence_suite(const SequenceConfig& config) {
    SuiteReport report;
    std::mt19937_64 rng(config.seed);
    for (std::size_t trial = 0; trial < config.trials; ++trial) {
        Allocator a(small_config(rng, config.policy, config.hash, config.range_bits));
        const auto script = random_script(rng, config.ops_per_trial, config.max_n, config.max_m);
        for (std::size_t i = 0; i < script.size(); ++i) {
            try {
                apply(a, script[i]);
            } catch (const Error& e) {
                report.get(kSettled).record(false, fmt::format("trial {} op {} ({}): {}", trial, i, op_name(script[i].kind), e.what()));
                break;
            }
            check_state(a, config.check, rng, report);
        }
    }
    return report;
}

SuiteReport run_capacity_change_suite(const CapacityChangeConfig& config) {
    SuiteReport report;
    report.get(kForwardingsOrderFree);
    report.get(kRefillBounded);
    std::mt19937_64 rng(config.seed);
    std::size_t done = 0;
    if (config.max_n < 2 || config.max_m == 0) return report;
    for (std::size_t attempt = 0; done < config.snapshots && attempt < 100 * config.snapshots; ++attempt) {
        const AllocatorConfig base = small_config(rng, ForwardPolicy::NewestBall, HashKind::Poly5, config.range_bits);
        const std::size_t length = 10 + uniform_below(rng, 4 * config.max_n);
        const auto script = random_script(rng, length, config.max_n, config.max_m);

        AllocatorConfig permuted_cfg = base;
        permuted_cfg.policy = ForwardPolicy::HighestPermutedId;
        Allocator states[2] = {Allocator(base), Allocator(permuted_cfg)};
        for (const Op& op : script) {
            for (auto& s : states) apply(s, op);
        }
        if (states[0].bin_count() < 2) continue;

        const std::size_t slack = states[0].total_capacity() - states[0].ball_count();
        if (slack <= 1) continue;
        std::vector<BinId> candidates;
        for (BinId id : states[0].bins_in_ring_order()) {
            if (states[0].is_full(id)) candidates.push_back(id);
        }
        if (candidates.empty() || uniform_below(rng, 4) == 0) candidates = states[0].bins_in_ring_order();
        const BinId bin = candidates[uniform_below(rng, candidates.size())];
        const std::size_t c_plus = states[0].capacity(bin);
        if (c_plus == 0) continue;
        const std::size_t lowest = c_plus > slack - 1 ? c_plus - (slack - 1) : 0;
        const std::size_t c_minus = lowest + uniform_below(rng, c_plus - lowest);

        std::vector<ForwardOrder> orders = {{ForwardPolicy::NewestBall, std::nullopt},
                                            {ForwardPolicy::HighestPermutedId, std::nullopt}};
        for (std::size_t k = 0; k < config.random_orders; ++k) orders.push_back({ForwardPolicy::NewestBall, rng()});

        std::set<std::size_t> counts;
        bool refill_ok = true;
        for (const auto& s : states) {
            for (const auto& order : orders) {
                const CapacityChangeMoves moves = capacity_change_moves(s, bin, c_minus, c_plus, order);
                counts.insert(moves.forwardings);
                refill_ok = refill_ok && moves.refill_moves <= moves.forwardings;
            }
        }
        report.get(kForwardingsOrderFree)
            .record(counts.size() == 1, fmt::format("snapshot {}: {} distinct forwarding counts for {} -> {}", done,
                                                    counts.size(), c_plus, c_minus));
        report.get(kRefillBounded).record(refill_ok, fmt::format("snapshot {}: refill exceeded forwardings", done));
        ++done;
    }
    return report;
}

SuiteReport run_all(std::size_t trials, std::size_t max_n, std::size_t max_m, std::uint64_t seed) {
    if (max_n == 0) throw Error(ErrorCode::InvalidArgument, "max_n must be at least 1");
    SuiteReport report;
    for (const char* name : {kSettled, kCounters, kHardCap, kLoadsMatchOracle, kLoadsOrderFree, kFullBinsIntervals,
                             kNonfullLoadsFromRuns, kCanonicalPlacement, kForwardingsOrderFree, kRefillBounded}) {
        report.get(name);
    }

    SequenceConfig seq;
    seq.trials = trials;
    seq.max_n = max_n;
    seq.max_m = max_m;
    seq.seed = seed;
    merge(report, run_sequence_suite(seq));

    seq.policy = ForwardPolicy::HighestPermutedId;
    seq.check.canonical = true;
    seq.check.shuffles = 2;
    seq.seed = seed + 1;
    merge(report, run_sequence_suite(seq));

    CapacityChangeConfig cc;
    cc.snapshots = trials / 5;
    cc.max_n = max_n;
    cc.max_m = max_m;
    cc.seed = seed + 2;
    merge(report, run_capacity_change_suite(cc));
    return report;
}

}  // namespace bch::props
