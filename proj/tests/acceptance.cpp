// Acceptance checks: one PASS/FAIL line per criterion.
//
//   acceptance            run all criteria
//   acceptance 3 7        run only criteria 3 and 7
//
// Exit status is 0 only when every selected criterion passes.

#include "bch/allocator.hpp"
#include "bch/baseline.hpp"
#include "bch/properties.hpp"
#include "bch/random.hpp"
#include "bch/simulator.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

using namespace bch;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string tally(const props::SuiteReport& r, const char* name) {
    const auto* p = r.find(name);
    if (!p) return fmt::format("{}: not run", name);
    std::string s = fmt::format("{} {}/{}", name, p->checks - p->failures, p->checks);
    if (!p->samples.empty()) s += " [" + p->samples.front() + "]";
    return s;
}

bool ok_and_ran(const props::SuiteReport& r, const char* name) {
    const auto* p = r.find(name);
    return p && p->checks > 0 && p->ok();
}

// 1. Hard cap across the default grid at 10^3 ops per cell.
Outcome hard_cap() {
    auto grid = sim::GridSpec::default_grid();
    grid.ops = 1000;
    grid.seed = 1;
    grid.verify_every = 100;
    const auto t0 = std::chrono::steady_clock::now();
    const auto results = sim::run_grid(grid);
    const double secs = seconds_since(t0);

    std::size_t violations = 0, unverified = 0;
    for (const auto& r : results) {
        violations += r.cap_violations;
        if (!r.verified) ++unverified;
    }

    // Settled build states with integral cm/n (r = 10, eps in {0.1, 0.3, 0.9}),
    // where the cap equals (1+eps) m/n exactly.
    sim::GridSpec integral;
    integral.n_values = grid.n_values;
    integral.ratios = {"10"};
    integral.epsilons = {"0.1", "0.3", "0.9"};
    integral.ops = 0;
    double worst = 0;
    for (const auto& r : sim::run_grid(integral)) {
        const double eps = Rational::parse_decimal(r.spec.epsilon).to_double();
        worst = std::max(worst, r.distribution.front() - (1 + eps));
    }

    const bool pass = violations == 0 && unverified == 0 && secs < 600 && worst <= 1e-9;
    return {pass, fmt::format("{} cells, {} cap violations, {} cells failing verification, {:.1f}s; "
                              "r=10 build states: max normalized load - (1+eps) = {:.3g}",
                              results.size(), violations, unverified, secs, worst)};
}

props::SuiteReport& small_sequences() {
    static props::SuiteReport report = [] {
        props::SequenceConfig cfg;
        cfg.trials = 1000;
        cfg.max_n = 16;
        cfg.max_m = 64;
        cfg.range_bits = 10;
        cfg.seed = 2024;
        cfg.check.shuffles = 10;
        return props::run_sequence_suite(cfg);
    }();
    return report;
}

// 2. Loads equal the oracle after every op; oracle loads ignore insertion order.
Outcome load_uniqueness() {
    const auto& r = small_sequences();
    const bool pass = ok_and_ran(r, props::kLoadsMatchOracle) && ok_and_ran(r, props::kLoadsOrderFree) &&
                      ok_and_ran(r, props::kSettled) && ok_and_ran(r, props::kCounters);
    return {pass, fmt::format("{}; {}; {}", tally(r, props::kLoadsMatchOracle), tally(r, props::kLoadsOrderFree),
                              tally(r, props::kSettled))};
}

// 3. Full bins by the interval criterion; non-full loads from the preceding run.
Outcome full_bins() {
    const auto& r = small_sequences();
    const bool pass = ok_and_ran(r, props::kFullBinsIntervals) && ok_and_ran(r, props::kNonfullLoadsFromRuns);
    return {pass, fmt::format("{}; {}", tally(r, props::kFullBinsIntervals), tally(r, props::kNonfullLoadsFromRuns))};
}

// 4. History independence under the permuted-id policy.
Outcome history_independence() {
    props::SequenceConfig cfg;
    cfg.trials = 500;
    cfg.range_bits = 10;
    cfg.seed = 4242;
    cfg.policy = ForwardPolicy::HighestPermutedId;
    cfg.check.canonical = true;
    cfg.check.shuffles = 0;
    const auto r = props::run_sequence_suite(cfg);
    const bool pass = ok_and_ran(r, props::kCanonicalPlacement) && ok_and_ran(r, props::kSettled);
    return {pass, fmt::format("{}; {}", tally(r, props::kCanonicalPlacement), tally(r, props::kSettled))};
}

// 5. Forwarding count of a capacity decrease is order independent.
Outcome capacity_change() {
    props::CapacityChangeConfig cfg;
    cfg.snapshots = 200;
    cfg.random_orders = 5;
    cfg.seed = 5;
    const auto r = props::run_capacity_change_suite(cfg);
    const bool pass = ok_and_ran(r, props::kForwardingsOrderFree) && ok_and_ran(r, props::kRefillBounded) &&
                      r.find(props::kForwardingsOrderFree)->checks == 200;
    return {pass, fmt::format("{}; {}", tally(r, props::kForwardingsOrderFree), tally(r, props::kRefillBounded))};
}

// 6. Movement bounds at n = 1000.
Outcome movement_bounds() {
    sim::GridSpec g;
    g.n_values = {1000};
    g.ratios = {"1", "5"};
    g.epsilons = {"0.1", "0.3", "0.5", "0.9", "1", "2", "3"};
    g.ops = 11000;  // 10^4 ball ops and 10^3 bin ops under the 10:10:1:1 mix
    g.seed = 1;
    const auto results = sim::run_grid(g);

    bool pass = true;
    std::vector<std::string> misses;
    std::map<std::string, std::vector<const sim::CellResult*>> by_ratio;
    for (const auto& r : results) {
        const double f = sim::f_bound(Rational::parse_decimal(r.spec.epsilon).to_double());
        if (r.ball.count != 10000 || r.bin.count != 1000) {
            pass = false;
            misses.push_back(fmt::format("r={} eps={}: {} ball / {} bin ops", r.spec.ratio, r.spec.epsilon, r.ball.count,
                                         r.bin.count));
        }
        if (r.ball.mean > f) {
            pass = false;
            misses.push_back(fmt::format("r={} eps={}: ball {:.3f} > f {:.3f}", r.spec.ratio, r.spec.epsilon, r.ball.mean, f));
        }
        if (r.bin.mean > f + 1) {
            pass = false;
            misses.push_back(
                fmt::format("r={} eps={}: bin/(m/n) {:.3f} > f+1 {:.3f}", r.spec.ratio, r.spec.epsilon, r.bin.mean, f + 1));
        }
        by_ratio[r.spec.ratio].push_back(&r);
    }
    for (const auto& [ratio, cells] : by_ratio) {
        for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
            const auto& a = cells[i]->ball;
            const auto& b = cells[i + 1]->ball;
            const double slack = 2 * std::hypot(a.stderr_of_mean(), b.stderr_of_mean());
            if (b.mean > a.mean + slack) {
                pass = false;
                misses.push_back(fmt::format("r={}: ball moves rise from eps={} ({:.3f}) to eps={} ({:.3f})", ratio,
                                             cells[i]->spec.epsilon, a.mean, cells[i + 1]->spec.epsilon, b.mean));
            }
        }
    }
    std::string table;
    for (const auto& r : results) {
        table += fmt::format(" [r={} eps={}: ball {:.3f} bin {:.3f} f {:.3f}]", r.spec.ratio, r.spec.epsilon, r.ball.mean,
                             r.bin.mean, sim::f_bound(Rational::parse_decimal(r.spec.epsilon).to_double()));
    }
    std::string detail = misses.empty() ? "all cells within bounds;" : "misses: " + fmt::format("{}", fmt::join(misses, "; ")) + ";";
    return {pass, detail + table};
}

// 7. Search visits fall with eps.
Outcome search_cost() {
    sim::GridSpec g;
    g.n_values = {1000};
    g.ratios = {"1"};
    g.epsilons = {"0.3", "0.9", "3"};
    g.ops = 22000;
    g.seed = 7;
    const auto res = sim::run_grid(g);
    const auto& v03 = res[0].visits;
    const auto& v09 = res[1].visits;
    const auto& v3 = res[2].visits;
    const double gap1 = 2 * std::hypot(v03.stderr_of_mean(), v09.stderr_of_mean());
    const double gap2 = 2 * std::hypot(v09.stderr_of_mean(), v3.stderr_of_mean());
    const bool pass = v03.mean - v09.mean >= gap1 && v09.mean - v3.mean >= gap2 && v3.mean <= 1.5;
    return {pass, fmt::format("visits eps=0.3 {:.3f} (se {:.3f}), eps=0.9 {:.3f} (se {:.3f}), eps=3 {:.3f} (se {:.3f}); "
                              "{} searches each",
                              v03.mean, v03.stderr_of_mean(), v09.mean, v09.stderr_of_mean(), v3.mean,
                              v3.stderr_of_mean(), v3.count)};
}

// 8. Plain consistent hashing: max load grows with n.
Outcome baseline_contrast() {
    const std::vector<std::size_t> sizes = {200, 1000, 8000};
    std::size_t increasing = 0;
    bool mean_exact = true;
    std::vector<double> avg_max(3, 0.0);
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto d = sim::run_baseline_distribution(sizes, seed);
        for (std::size_t i = 0; i < 3; ++i) {
            double total = 0;
            for (double x : d[i]) total += x;
            mean_exact = mean_exact && total == static_cast<double>(sizes[i]);
            avg_max[i] += d[i].front() / 50;
        }
        if (d[0].front() < d[1].front() && d[1].front() < d[2].front()) ++increasing;
    }
    const bool pass = increasing >= 45 && mean_exact;
    return {pass, fmt::format("strictly increasing max load in {}/50 seeds (need 45); mean load exactly 1: {}; "
                              "average max load {:.2f} / {:.2f} / {:.2f}",
                              increasing, mean_exact ? "yes" : "no", avg_max[0], avg_max[1], avg_max[2])};
}

// Mixed churn on one allocator, 10:10:1:1, with floors on m and n.
struct Churn {
    Allocator& alloc;
    std::mt19937_64 rng;
    std::vector<BallId> balls;
    std::vector<BinId> bins;
    BallId next_ball = 0;
    BinId next_bin = 0;

    Churn(Allocator& a, std::uint64_t seed) : alloc(a), rng(seed) {}

    template <class T>
    T take(std::vector<T>& v) {
        const std::size_t i = uniform_below(rng, v.size());
        const T id = v[i];
        v[i] = v.back();
        v.pop_back();
        return id;
    }

    UpdateStats add_bin() {
        bins.push_back(next_bin);
        return alloc.add_bin(next_bin++);
    }
    UpdateStats insert_ball() {
        balls.push_back(next_ball);
        return alloc.insert_ball(next_ball++);
    }
    UpdateStats step() {
        const std::uint64_t r = uniform_below(rng, 22);
        if (r < 10 || (r < 20 && balls.empty())) return insert_ball();
        if (r < 20) return alloc.delete_ball(take(balls));
        if (r == 20 || bins.size() <= 1) return add_bin();
        return alloc.remove_bin(take(bins));
    }
};

// 9. Counters and successor index after heavy churn at n = 10^4.
Outcome counters_and_index() {
    AllocatorConfig cfg;
    cfg.rule = CapacityRule::balanced(Rational(3, 2));
    cfg.seed = 9;
    Allocator a(cfg);
    Churn churn(a, 99);
    for (int i = 0; i < 10000; ++i) churn.add_bin();
    for (int i = 0; i < 10000; ++i) churn.insert_ball();

    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < 100000; ++i) churn.step();
    const double secs = seconds_since(t0);
    const auto report = a.verify_settled();

    const auto points = a.index().points();
    std::size_t mismatches = 0;
    std::mt19937_64 rng(909);
    const int bits = a.config().range_bits;
    for (int i = 0; i < 10000; ++i) {
        const RingPoint q = RingPoint::ball(rng() >> (64 - bits), rng());
        const RingPoint* naive = &points.front();
        for (const auto& p : points) {
            if (!(p < q)) {
                naive = &p;
                break;
            }
        }
        if (!(a.index().successor(q) == *naive)) ++mismatches;
    }
    const bool pass = report.all_ok() && mismatches == 0;
    return {pass, fmt::format("recount {} ({}), successor mismatches {}/10000; {:.0f} ops/sec over 10^5 ops at n={} m={}",
                              report.all_ok() ? "matches" : "DIFFERS",
                              report.problems.empty() ? "no problems" : report.problems.front(), mismatches,
                              100000 / secs, a.bin_count(), a.ball_count())};
}

// 10. Longest full run grows like ln n at eps = 0.5.
Outcome full_runs() {
    const std::vector<std::size_t> sizes = {1000, 10000, 100000};
    std::vector<double> runs;
    for (std::size_t n : sizes) {
        AllocatorConfig cfg;
        cfg.rule = CapacityRule::balanced(Rational(3, 2));
        cfg.seed = 10 + n;
        Allocator a(cfg);
        Churn churn(a, 1000 + n);
        for (std::size_t i = 0; i < n; ++i) churn.add_bin();
        for (std::size_t i = 0; i < n; ++i) churn.insert_ball();
        std::size_t longest = a.longest_full_run();
        for (int i = 0; i < 100000; ++i) {
            longest = std::max(longest, churn.step().max_run_observed);
            if (i % 1000 == 999) longest = std::max(longest, a.longest_full_run());
        }
        runs.push_back(static_cast<double>(longest));
    }
    bool pass = true;
    std::string detail;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const double ratio = runs[i] / std::log(static_cast<double>(sizes[i]));
        detail += fmt::format("n={}: run {} (run/ln n {:.2f}) ", sizes[i], runs[i], ratio);
        if (i > 0) {
            const double prev = runs[i - 1] / std::log(static_cast<double>(sizes[i - 1]));
            pass = pass && ratio <= 2 * prev;
        }
    }
    // Least-squares slope of run length against ln n, for reference.
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        mx += std::log(static_cast<double>(sizes[i])) / 3;
        my += runs[i] / 3;
    }
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        const double dx = std::log(static_cast<double>(sizes[i])) - mx;
        sxy += dx * (runs[i] - my);
        sxx += dx * dx;
    }
    return {pass, detail + fmt::format("| slope vs ln n {:.2f}", sxy / sxx)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"hard capacity cap over the default grid", hard_cap},
        {"load uniqueness against the oracle", load_uniqueness},
        {"full-bin characterization and run loads", full_bins},
        {"history independence under permuted-id forwarding", history_independence},
        {"capacity-change forwarding determinism", capacity_change},
        {"movement bounds at n=1000", movement_bounds},
        {"search cost falls with eps", search_cost},
        {"plain consistent hashing max load grows with n", baseline_contrast},
        {"counter and index correctness after 10^5 ops", counters_and_index},
        {"longest full run grows like ln n", full_runs},
    };
    std::set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!selected.empty() && !selected.contains(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        all = all && o.pass;
        fmt::print("{} criterion {}: {} ({:.1f}s) | {}\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first,
                   seconds_since(t0), o.detail);
        std::fflush(stdout);
    }
    return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
