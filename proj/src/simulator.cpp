#include "bch/simulator.hpp"

#include "bch/baseline.hpp"
#include "bch/errors.hpp"
#include "bch/random.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <thread>
#include <unordered_map>

namespace bch::sim {

double f_bound(double epsilon) {
    if (!(epsilon > 0)) throw Error(ErrorCode::InvalidArgument, "f_bound needs epsilon > 0");
    if (epsilon < 1) return 2.0 / (epsilon * epsilon);
    return 1.0 + std::log1p(epsilon) / (1.0 + epsilon);
}

double MoveSummary::stderr_of_mean() const {
    return count > 1 ? stddev / std::sqrt(static_cast<double>(count)) : 0.0;
}

namespace {

enum class OpType { BallInsert, BallDelete, BinAdd, BinRemove };

// Id set with O(1) insert, erase and uniform sampling.
class SampledSet {
public:
    void add(std::uint64_t id) {
        pos_[id] = items_.size();
        items_.push_back(id);
    }
    void erase(std::uint64_t id) {
        const std::size_t i = pos_.at(id);
        items_[i] = items_.back();
        pos_[items_[i]] = i;
        items_.pop_back();
        pos_.erase(id);
    }
    std::uint64_t pick(std::mt19937_64& rng) const { return items_[uniform_below(rng, items_.size())]; }
    std::size_t size() const noexcept { return items_.size(); }
    bool empty() const noexcept { return items_.empty(); }

private:
    std::vector<std::uint64_t> items_;
    std::unordered_map<std::uint64_t, std::size_t> pos_;
};

MoveSummary summarize(const std::vector<double>& xs) {
    MoveSummary s;
    s.count = xs.size();
    if (xs.empty()) return s;
    s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    return s;
}

std::size_t round_ratio(const Rational& ratio, std::size_t n) {
    // floor(ratio * n + 1/2)
    return static_cast<std::size_t>(Rational(ratio.num() * 2, ratio.den()).floor_mul_div(n, 1) + 1) / 2;
}

std::vector<OpType> churn_sequence(const OpMix& mix, std::size_t ops, std::mt19937_64& rng) {
    const double weights[4] = {mix.ball_insert, mix.ball_delete, mix.bin_add, mix.bin_remove};
    const double total = weights[0] + weights[1] + weights[2] + weights[3];
    if (ops > 0 && !(total > 0)) throw Error(ErrorCode::InvalidArgument, "op mix has no positive weight");
    std::vector<OpType> seq;
    seq.reserve(ops);
    std::size_t assigned = 0;
    for (int t = 0; t < 4; ++t) {
        if (weights[t] < 0) throw Error(ErrorCode::InvalidArgument, "op mix weights must be non-negative");
        std::size_t k = ops == 0 ? 0 : static_cast<std::size_t>(std::llround(static_cast<double>(ops) * weights[t] / total));
        k = std::min(k, ops - assigned);
        if (t == 3) k = ops - assigned;
        seq.insert(seq.end(), k, static_cast<OpType>(t));
        assigned += k;
    }
    fisher_yates(seq, rng);
    return seq;
}

}  // namespace

CellResult run_cell(const CellSpec& spec) {
    if (spec.n == 0) throw Error(ErrorCode::Infeasible, "cell needs at least one bin");
    const Rational ratio = Rational::parse_decimal(spec.ratio);
    const Rational eps = Rational::parse_decimal(spec.epsilon);
    if (eps.num() == 0) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");

    CellResult res;
    res.spec = spec;
    const std::size_t m0 = round_ratio(ratio, spec.n);
    res.initial_m = m0;

    AllocatorConfig cfg;
    cfg.rule = CapacityRule::balanced(Rational(1, 1) + eps);
    cfg.hash = spec.hash;
    cfg.seed = spec.seed;
    cfg.range_bits = spec.range_bits;
    cfg.policy = spec.policy;
    Allocator alloc(cfg);

    std::mt19937_64 rng(spec.seed ^ 0x5851f42d4c957f2dULL);
    SampledSet balls, bins;
    BallId next_ball = 0;
    BinId next_bin = 0;

    // Normalized load is tracked from the end of the build on; during the
    // ramp m/n is tiny and a single ball already reads as a huge ratio.
    auto check_state = [&](bool track_norm) {
        const std::size_t m = alloc.ball_count();
        const std::size_t n = alloc.bin_count();
        if (alloc.max_load() > alloc.load_cap()) ++res.cap_violations;
        if (track_norm && m > 0) {
            const double avg = static_cast<double>(m) / static_cast<double>(n);
            res.max_norm_load = std::max(res.max_norm_load, static_cast<double>(alloc.max_load()) / avg);
        }
    };
    auto verify = [&] {
        const SettledReport r = alloc.verify_settled();
        if (!r.all_ok()) {
            res.verified = false;
            for (const auto& p : r.problems) {
                if (res.problems.size() < 16) res.problems.push_back(p);
            }
        }
    };

    for (std::size_t i = 0; i < spec.n; ++i) {
        alloc.add_bin(next_bin);
        bins.add(next_bin++);
    }
    for (std::size_t j = 0; j < m0; ++j) {
        alloc.insert_ball(next_ball);
        balls.add(next_ball++);
        check_state(j + 1 == m0);
    }
    verify();

    std::vector<double> moves[4];
    std::vector<double> bin_normalized;
    std::vector<double> visits;
    const auto sequence = churn_sequence(spec.mix, spec.ops, rng);
    for (std::size_t step = 0; step < sequence.size(); ++step) {
        OpType op = sequence[step];
        if (op == OpType::BallDelete && balls.empty()) op = OpType::BallInsert;
        if (op == OpType::BinRemove && bins.size() <= 1) op = OpType::BinAdd;

        const double avg_before = static_cast<double>(alloc.ball_count()) / static_cast<double>(alloc.bin_count());
        UpdateStats st;
        switch (op) {
            case OpType::BallInsert:
                st = alloc.insert_ball(next_ball);
                balls.add(next_ball++);
                break;
            case OpType::BallDelete: {
                const BallId id = balls.pick(rng);
                st = alloc.delete_ball(id);
                balls.erase(id);
                break;
            }
            case OpType::BinAdd:
                st = alloc.add_bin(next_bin);
                bins.add(next_bin++);
                break;
            case OpType::BinRemove: {
                const BinId id = bins.pick(rng);
                st = alloc.remove_bin(id);
                bins.erase(id);
                break;
            }
        }
        const double moved = static_cast<double>(st.balls_moved);
        moves[static_cast<int>(op)].push_back(moved);
        if (op == OpType::BinAdd || op == OpType::BinRemove) {
            bin_normalized.push_back(avg_before > 0 ? moved / avg_before : moved);
        }
        res.max_run = std::max(res.max_run, st.max_run_observed);
        check_state(true);

        if (spec.search_after_ball_ops && (op == OpType::BallInsert || op == OpType::BallDelete) && !balls.empty()) {
            const SearchResult sr = alloc.search(balls.pick(rng));
            if (const auto* f = std::get_if<Found>(&sr)) {
                visits.push_back(static_cast<double>(f->visited));
            } else {
                res.verified = false;
                res.problems.push_back("search failed to find a present ball");
            }
        }
        if (spec.verify_every > 0 && (step + 1) % spec.verify_every == 0) verify();
    }
    verify();

    res.ball_insert = summarize(moves[0]);
    res.ball_delete = summarize(moves[1]);
    res.bin_add = summarize(moves[2]);
    res.bin_remove = summarize(moves[3]);
    std::vector<double> ball_all = moves[0];
    ball_all.insert(ball_all.end(), moves[1].begin(), moves[1].end());
    res.ball = summarize(ball_all);
    res.bin = summarize(bin_normalized);
    res.visits = summarize(visits);

    res.final_m = alloc.ball_count();
    res.final_n = alloc.bin_count();
    if (res.final_m > 0) {
        const double avg = static_cast<double>(res.final_m) / static_cast<double>(res.final_n);
        for (const auto& [id, load] : alloc.loads()) res.distribution.push_back(static_cast<double>(load) / avg);
        std::sort(res.distribution.begin(), res.distribution.end(), std::greater<>());
    }
    return res;
}

GridSpec GridSpec::default_grid() {
    GridSpec g;
    g.n_values = {10, 20, 40, 70, 100, 150, 200, 300, 450, 600, 800, 1000, 2000};
    g.ratios = {"0.5", "0.8", "1", "1.2", "1.5", "2", "3", "5", "10"};
    g.epsilons = {"0.05", "0.1", "0.2", "0.3", "0.4", "0.5", "0.6", "0.7", "0.8", "0.9",
                  "1", "1.2", "1.5", "1.8", "2", "2.3", "2.5", "2.8", "3"};
    return g;
}

std::uint64_t cell_seed(std::uint64_t grid_seed, std::size_t cell_id) {
    SplitMix64 gen(grid_seed ^ (static_cast<std::uint64_t>(cell_id) * 0xd1b54a32d192ed03ULL));
    return gen.next();
}

std::vector<CellSpec> expand_grid(const GridSpec& spec) {
    if (spec.n_values.empty() || spec.ratios.empty() || spec.epsilons.empty()) {
        throw Error(ErrorCode::InvalidArgument, "grid lists must be non-empty");
    }
    std::vector<CellSpec> cells;
    for (std::size_t n : spec.n_values) {
        for (const auto& ratio : spec.ratios) {
            for (const auto& eps : spec.epsilons) {
                CellSpec c;
                c.n = n;
                c.ratio = ratio;
                c.epsilon = eps;
                c.ops = spec.ops;
                c.seed = cell_seed(spec.seed, cells.size());
                c.mix = spec.mix;
                c.policy = spec.policy;
                c.hash = spec.hash;
                c.verify_every = spec.verify_every;
                cells.push_back(c);
            }
        }
    }
    return cells;
}

std::vector<CellResult> run_grid(const GridSpec& spec) {
    const std::vector<CellSpec> cells = expand_grid(spec);
    std::vector<CellResult> results(cells.size());
    unsigned workers = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(cells.size()));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto work = [&] {
        while (!failed) {
            const std::size_t i = next++;
            if (i >= cells.size()) return;
            try {
                results[i] = run_cell(cells[i]);
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);
    return results;
}

void write_grid_csv(std::ostream& out, const std::vector<CellResult>& results) {
    out << kCsvHeader << '\n';
    for (std::size_t id = 0; id < results.size(); ++id) {
        const CellResult& r = results[id];
        const double f = f_bound(Rational::parse_decimal(r.spec.epsilon).to_double());
        const std::pair<const char*, const MoveSummary*> rows[] = {
            {"ball_insert", &r.ball_insert}, {"ball_delete", &r.ball_delete}, {"bin_add", &r.bin_add},
            {"bin_remove", &r.bin_remove},   {"ball", &r.ball},               {"bin", &r.bin},
        };
        for (const auto& [name, s] : rows) {
            fmt::print(out, "{},{},{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{},{:.6f}\n", id, r.spec.n, r.spec.ratio,
                       r.spec.epsilon, to_string(r.spec.policy), to_string(r.spec.hash), r.spec.seed, name, s->mean,
                       s->stddev, r.visits.mean, r.max_norm_load, r.max_run, f);
        }
    }
}

void write_distribution_csv(std::ostream& out, const std::vector<double>& sorted_desc) {
    out << "rank_fraction,normalized_load\n";
    const double k = static_cast<double>(sorted_desc.size());
    for (std::size_t i = 0; i < sorted_desc.size(); ++i) {
        fmt::print(out, "{:.6f},{:.6f}\n", static_cast<double>(i) / k, sorted_desc[i]);
    }
}

std::vector<std::vector<double>> run_baseline_distribution(const std::vector<std::size_t>& n_values, std::uint64_t seed,
                                                           HashKind hash) {
    std::vector<std::vector<double>> out;
    for (std::size_t n : n_values) {
        if (n == 0) throw Error(ErrorCode::InvalidArgument, "baseline needs n >= 1");
        PlainRing ring(hash, seed);
        std::vector<BallId> balls(n);
        for (std::size_t i = 0; i < n; ++i) {
            ring.add_bin(i);
            balls[i] = i;
        }
        std::vector<double> loads;
        for (const auto& [id, load] : ring.loads(balls)) loads.push_back(static_cast<double>(load));
        std::sort(loads.begin(), loads.end(), std::greater<>());
        out.push_back(std::move(loads));
    }
    return out;
}

BenchResult run_bench(const BenchSpec& spec) {
    if (spec.n == 0) throw Error(ErrorCode::InvalidArgument, "bench needs n >= 1");
    const Rational ratio = Rational::parse_decimal(spec.ratio);
    const Rational eps = Rational::parse_decimal(spec.epsilon);
    if (eps.num() == 0) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");

    AllocatorConfig cfg;
    cfg.rule = CapacityRule::balanced(Rational(1, 1) + eps);
    cfg.hash = spec.hash;
    cfg.seed = spec.seed;
    cfg.policy = spec.policy;
    Allocator alloc(cfg);
    std::mt19937_64 rng(spec.seed ^ 0x2545f4914f6cdd1dULL);
    SampledSet balls, bins;
    BallId next_ball = 0;
    BinId next_bin = 0;
    for (std::size_t i = 0; i < spec.n; ++i) {
        alloc.add_bin(next_bin);
        bins.add(next_bin++);
    }
    for (std::size_t j = 0, m = round_ratio(ratio, spec.n); j < m; ++j) {
        alloc.insert_ball(next_ball);
        balls.add(next_ball++);
    }

    const auto sequence = churn_sequence(OpMix{}, spec.ops, rng);
    std::vector<std::size_t> moves;
    moves.reserve(sequence.size());
    const auto start = std::chrono::steady_clock::now();
    for (OpType op : sequence) {
        if (op == OpType::BallDelete && balls.empty()) op = OpType::BallInsert;
        if (op == OpType::BinRemove && bins.size() <= 1) op = OpType::BinAdd;
        UpdateStats st;
        switch (op) {
            case OpType::BallInsert:
                st = alloc.insert_ball(next_ball);
                balls.add(next_ball++);
                break;
            case OpType::BallDelete: {
                const BallId id = balls.pick(rng);
                st = alloc.delete_ball(id);
                balls.erase(id);
                break;
            }
            case OpType::BinAdd:
                st = alloc.add_bin(next_bin);
                bins.add(next_bin++);
                break;
            case OpType::BinRemove: {
                const BinId id = bins.pick(rng);
                st = alloc.remove_bin(id);
                bins.erase(id);
                break;
            }
        }
        moves.push_back(st.balls_moved);
    }
    const auto stop = std::chrono::steady_clock::now();

    BenchResult r;
    r.ops = moves.size();
    r.seconds = std::chrono::duration<double>(stop - start).count();
    r.ops_per_sec = r.seconds > 0 ? static_cast<double>(r.ops) / r.seconds : 0;
    if (!moves.empty()) {
        r.mean_moves = static_cast<double>(std::accumulate(moves.begin(), moves.end(), std::size_t{0})) / static_cast<double>(moves.size());
        std::vector<std::size_t> sorted = moves;
        std::sort(sorted.begin(), sorted.end());
        const std::size_t idx = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(sorted.size()))) - 1;
        r.p99_moves = sorted[idx];
        r.max_moves = sorted.back();
    }
    return r;
}

}  // namespace bch::sim
