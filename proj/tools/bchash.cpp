// bchash: simulate, verify, bench and demo for consistent hashing with
// bounded loads.
//
// Exit codes: 0 success, 1 property or capacity violation, 2 usage error.
// BCHASH_OUT_DIR overrides the directory for default output paths.

#include "bch/allocator.hpp"
#include "bch/errors.hpp"
#include "bch/oracle.hpp"
#include "bch/properties.hpp"
#include "bch/simulator.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

fs::path default_out_dir() {
    if (const char* env = std::getenv("BCHASH_OUT_DIR"); env && *env) return env;
    return ".";
}

fs::path resolve(const std::string& given, const char* fallback) {
    return given.empty() ? default_out_dir() / fallback : fs::path(given);
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

bch::Rational positive_decimal(const std::string& text, const char* what) {
    bch::Rational r;
    try {
        r = bch::Rational::parse_decimal(text);
    } catch (const bch::Error&) {
        throw UsageError(fmt::format("{} must be a plain decimal, got '{}'", what, text));
    }
    if (r.num() == 0) throw UsageError(fmt::format("{} must be positive, got '{}'", what, text));
    return r;
}

bch::ForwardPolicy policy_flag(const std::string& s) {
    try {
        return bch::parse_forward_policy(s);
    } catch (const bch::Error& e) {
        throw UsageError(e.what());
    }
}

bch::HashKind hash_flag(const std::string& s) {
    try {
        return bch::parse_hash_kind(s);
    } catch (const bch::Error& e) {
        throw UsageError(e.what());
    }
}

struct SimulateFlags {
    std::vector<std::size_t> n_list;
    std::vector<std::string> ratio_list;
    std::vector<std::string> eps_list;
    std::size_t ops = 10000;
    std::uint64_t seed = 1;
    std::string hash = "poly5";
    std::string policy = "newest";
    std::string out;
    std::string dist_out;
    std::string baseline_out;
    std::vector<std::size_t> baseline_n = {200, 1000, 8000};
    std::size_t verify_every = 0;
    unsigned threads = 0;
};

int run_simulate(const SimulateFlags& f) {
    bch::sim::GridSpec grid = bch::sim::GridSpec::default_grid();
    if (!f.n_list.empty()) grid.n_values = f.n_list;
    if (!f.ratio_list.empty()) grid.ratios = f.ratio_list;
    if (!f.eps_list.empty()) grid.epsilons = f.eps_list;
    for (std::size_t n : grid.n_values) {
        if (n == 0) throw UsageError("--n-list entries must be at least 1");
    }
    for (const auto& r : grid.ratios) {
        try {
            bch::Rational::parse_decimal(r);
        } catch (const bch::Error&) {
            throw UsageError("bad ratio '" + r + "'");
        }
    }
    for (const auto& e : grid.epsilons) positive_decimal(e, "epsilon");
    grid.ops = f.ops;
    grid.seed = f.seed;
    grid.hash = hash_flag(f.hash);
    grid.policy = policy_flag(f.policy);
    grid.verify_every = f.verify_every;
    grid.threads = f.threads;

    const auto results = bch::sim::run_grid(grid);

    const fs::path out_path = resolve(f.out, "grid.csv");
    {
        auto out = open_out(out_path);
        bch::sim::write_grid_csv(out, results);
    }
    if (!f.dist_out.empty()) {
        const fs::path dir = f.dist_out;
        fs::create_directories(dir);
        for (std::size_t id = 0; id < results.size(); ++id) {
            const auto& r = results[id];
            auto out = open_out(dir / fmt::format("dist_n{}_r{}_eps{}.csv", r.spec.n, r.spec.ratio, r.spec.epsilon));
            bch::sim::write_distribution_csv(out, r.distribution);
        }
    }
    if (!f.baseline_out.empty()) {
        const fs::path dir = f.baseline_out;
        fs::create_directories(dir);
        const auto dists = bch::sim::run_baseline_distribution(f.baseline_n, f.seed, grid.hash);
        for (std::size_t i = 0; i < dists.size(); ++i) {
            auto out = open_out(dir / fmt::format("baseline_n{}.csv", f.baseline_n[i]));
            bch::sim::write_distribution_csv(out, dists[i]);
        }
    }

    std::size_t violations = 0, unverified = 0;
    for (std::size_t id = 0; id < results.size(); ++id) {
        const auto& r = results[id];
        if (r.cap_violations > 0) {
            ++violations;
            std::cerr << fmt::format("cell {} (n={} r={} eps={}): {} hard-cap violations\n", id, r.spec.n, r.spec.ratio,
                                     r.spec.epsilon, r.cap_violations);
        }
        if (!r.verified) {
            ++unverified;
            std::cerr << fmt::format("cell {}: settled-state check failed: {}\n", id,
                                     r.problems.empty() ? "" : r.problems.front());
        }
    }
    std::cout << fmt::format("{} cells written to {}\n", results.size(), out_path.string());
    if (violations || unverified) {
        std::cerr << fmt::format("{} cells with cap violations, {} cells failing verification\n", violations, unverified);
        return kViolation;
    }
    return kOk;
}

int run_verify(std::size_t trials, std::size_t max_n, std::size_t max_m, std::uint64_t seed) {
    if (max_n == 0) throw UsageError("--max-n must be at least 1");
    const auto report = bch::props::run_all(trials, max_n, max_m, seed);
    for (const auto& p : report.properties) {
        std::cout << fmt::format("{} {} ({} checks, {} failures)\n", p.ok() ? "PASS" : "FAIL", p.name, p.checks,
                                 p.failures);
        for (const auto& s : p.samples) std::cout << "    " << s << '\n';
    }
    return report.all_ok() ? kOk : kViolation;
}

int bench_command(const bch::sim::BenchSpec& spec) {
    positive_decimal(spec.epsilon, "--eps");
    try {
        bch::Rational::parse_decimal(spec.ratio);
    } catch (const bch::Error&) {
        throw UsageError("bad --ratio '" + spec.ratio + "'");
    }
    if (spec.n == 0) throw UsageError("--n must be at least 1");
    const auto r = bch::sim::run_bench(spec);
    std::cout << fmt::format("ops {}\nseconds {:.3f}\nops_per_sec {:.0f}\nmean_moves {:.4f}\np99_moves {}\nmax_moves {}\n",
                             r.ops, r.seconds, r.ops_per_sec, r.mean_moves, r.p99_moves, r.max_moves);
    return kOk;
}

int run_demo(std::size_t n, std::size_t m, const std::string& eps, std::uint64_t seed, const std::string& policy) {
    const bch::Rational e = positive_decimal(eps, "--eps");
    bch::AllocatorConfig cfg;
    cfg.rule = bch::CapacityRule::balanced(bch::Rational(1, 1) + e);
    cfg.seed = seed;
    cfg.range_bits = 16;
    cfg.policy = policy_flag(policy);
    bch::Allocator a(cfg);
    for (std::size_t i = 0; i < n; ++i) a.add_bin(i);
    for (std::size_t j = 0; j < m; ++j) a.insert_ball(j);

    std::cout << fmt::format("n={} m={} c={} load_cap={} range=2^{}\n", a.bin_count(), a.ball_count(),
                             cfg.rule.c.to_string(), n ? a.load_cap() : 0, cfg.range_bits);
    std::cout << fmt::format("{:>8} {:>6} {:>4} {:>4} {:>4}  residents (origin: balls)\n", "position", "bin", "cap",
                             "load", "fwd");
    for (bch::BinId id : a.bins_in_ring_order()) {
        const bch::BinView v = a.bin_view(id);
        std::string groups;
        for (const auto& [origin, balls] : v.origins) {
            groups += fmt::format(" {}:[{}]", origin, fmt::join(balls, ","));
        }
        std::cout << fmt::format("{:>8} {:>6} {:>4} {:>4} {:>4} {}\n", v.position, v.id, v.capacity, v.load,
                                 v.forward_count, groups);
    }
    if (n == 0) return kOk;
    const auto snap = a.snapshot();
    std::vector<bch::BallId> order;
    for (const auto& b : snap.balls) order.push_back(b.id);
    const bool loads_ok = bch::oracle::allocate(snap, bch::oracle::InsertionSequence{order}).loads == a.loads();
    const bool settled = a.verify_settled().all_ok();
    std::cout << fmt::format("oracle loads {}; settled {}\n", loads_ok ? "match" : "DIFFER", settled ? "ok" : "FAILED");
    return loads_ok && settled ? kOk : kViolation;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Consistent hashing with bounded loads"};
    app.require_subcommand(1);

    SimulateFlags sim;
    auto* simulate = app.add_subcommand("simulate", "Run a simulation grid and write CSV");
    simulate->add_option("--n-list", sim.n_list, "Bin counts")->delimiter(',');
    simulate->add_option("--ratio-list", sim.ratio_list, "Ball-to-bin ratios m/n")->delimiter(',');
    simulate->add_option("--eps-list", sim.eps_list, "Epsilon values")->delimiter(',');
    simulate->add_option("--ops", sim.ops, "Churn operations per cell")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Grid seed")->capture_default_str();
    simulate->add_option("--hash", sim.hash, "poly5 or tab")->capture_default_str();
    simulate->add_option("--policy", sim.policy, "newest or permuted")->capture_default_str();
    simulate->add_option("--out", sim.out, "Grid CSV path (default $BCHASH_OUT_DIR/grid.csv)");
    simulate->add_option("--dist-out", sim.dist_out, "Directory for per-cell load distributions");
    simulate->add_option("--baseline-out", sim.baseline_out, "Directory for plain consistent hashing distributions");
    simulate->add_option("--baseline-n", sim.baseline_n, "Sizes for the baseline (m = n)")->delimiter(',');
    simulate->add_option("--verify-every", sim.verify_every, "Full state check every k ops (0: build end and finish)");
    simulate->add_option("--threads", sim.threads, "Worker threads (0: all cores)");

    std::size_t trials = 1000, max_n = 16, max_m = 64;
    std::uint64_t verify_seed = 1;
    auto* verify = app.add_subcommand("verify", "Run the property suites against the brute-force oracle");
    verify->add_option("--trials", trials)->capture_default_str();
    verify->add_option("--max-n", max_n)->capture_default_str();
    verify->add_option("--max-m", max_m)->capture_default_str();
    verify->add_option("--seed", verify_seed)->capture_default_str();

    bch::sim::BenchSpec bench_spec;
    std::string bench_policy = "newest", bench_hash = "poly5";
    auto* bench = app.add_subcommand("bench", "Throughput of mixed operations");
    bench->add_option("--n", bench_spec.n)->capture_default_str();
    bench->add_option("--ratio", bench_spec.ratio)->capture_default_str();
    bench->add_option("--eps", bench_spec.epsilon)->capture_default_str();
    bench->add_option("--ops", bench_spec.ops)->capture_default_str();
    bench->add_option("--seed", bench_spec.seed)->capture_default_str();
    bench->add_option("--policy", bench_policy)->capture_default_str();
    bench->add_option("--hash", bench_hash)->capture_default_str();

    std::size_t demo_n = 8;
    std::optional<std::size_t> demo_m;
    std::string demo_eps = "0.5", demo_policy = "newest";
    std::uint64_t demo_seed = 1;
    auto* demo = app.add_subcommand("demo", "Print a ring dump for a small instance");
    demo->add_option("--n", demo_n)->capture_default_str();
    demo->add_option("--m", demo_m, "Balls (default 2n)");
    demo->add_option("--eps", demo_eps)->capture_default_str();
    demo->add_option("--seed", demo_seed)->capture_default_str();
    demo->add_option("--policy", demo_policy)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*verify) return run_verify(trials, max_n, max_m, verify_seed);
        if (*bench) {
            bench_spec.policy = policy_flag(bench_policy);
            bench_spec.hash = hash_flag(bench_hash);
            return bench_command(bench_spec);
        }
        if (*demo) return run_demo(demo_n, demo_m.value_or(2 * demo_n), demo_eps, demo_seed, demo_policy);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kViolation;
    }
    return kUsage;
}
