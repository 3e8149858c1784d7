#pragma once

#include "bch/allocator.hpp"
#include "bch/hashing.hpp"
#include "bch/rational.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace bch::sim {

// Movement bound overlaid on the movement figures:
// 2/eps^2 for eps < 1, else 1 + ln(1+eps)/(1+eps).
double f_bound(double epsilon);

// Relative weights of the churn operations. Counts per cell are
// round(ops * weight / total), so a 10:10:1:1 mix over 22000 ops gives
// exactly 10000 ball inserts, 10000 ball deletes, 1000 bin adds and 1000
// bin removes.
struct OpMix {
    double ball_insert = 10;
    double ball_delete = 10;
    double bin_add = 1;
    double bin_remove = 1;
};

struct CellSpec {
    std::size_t n = 100;
    std::string ratio = "1";    // m / n, exact decimal
    std::string epsilon = "0.3";
    std::size_t ops = 1000;      // churn operations after the build phase
    std::uint64_t seed = 1;
    OpMix mix;
    ForwardPolicy policy = ForwardPolicy::NewestBall;
    HashKind hash = HashKind::Poly5;
    int range_bits = HashFamily::kDefaultRangeBits;
    std::size_t verify_every = 0;  // 0: only after the build and at the end
    bool search_after_ball_ops = true;
};

struct MoveSummary {
    std::size_t count = 0;
    double mean = 0;
    double stddev = 0;

    double stderr_of_mean() const;
};

struct CellResult {
    CellSpec spec;
    std::size_t initial_m = 0;
    std::size_t final_m = 0;
    std::size_t final_n = 0;

    MoveSummary ball_insert, ball_delete, bin_add, bin_remove;
    MoveSummary ball;             // inserts and deletes together
    MoveSummary bin;              // adds and removes, each divided by m/n before the op
    MoveSummary visits;           // bins visited searching a random present ball

    double max_norm_load = 0;     // max over settled states of max load / (m/n)
    std::size_t max_run = 0;      // longest run of full bins walked by any op
    std::size_t cap_violations = 0;
    bool verified = true;
    std::vector<std::string> problems;

    std::vector<double> distribution;  // final loads / (m/n), sorted descending
};

CellResult run_cell(const CellSpec& spec);

struct GridSpec {
    std::vector<std::size_t> n_values;
    std::vector<std::string> ratios;
    std::vector<std::string> epsilons;
    std::size_t ops = 10000;
    std::uint64_t seed = 1;
    OpMix mix;
    ForwardPolicy policy = ForwardPolicy::NewestBall;
    HashKind hash = HashKind::Poly5;
    std::size_t verify_every = 0;
    unsigned threads = 0;  // 0: hardware concurrency

    static GridSpec default_grid();
};

// The per-cell seed: a fixed mix of the grid seed and the cell index.
std::uint64_t cell_seed(std::uint64_t grid_seed, std::size_t cell_id);

std::vector<CellSpec> expand_grid(const GridSpec& spec);

// Runs every cell (in parallel, one allocator per cell) and returns results
// in cell order.
std::vector<CellResult> run_grid(const GridSpec& spec);

inline constexpr const char* kCsvHeader =
    "cell_id,n,ratio,epsilon,policy,hash,seed,op_type,mean_moves,std_moves,mean_visits,max_norm_load,max_run,f_bound";

// One header row, then six rows per cell: ball_insert, ball_delete, bin_add,
// bin_remove, ball, bin.
void write_grid_csv(std::ostream& out, const std::vector<CellResult>& results);

// rank_fraction,normalized_load rows; rank i of k gets i/k.
void write_distribution_csv(std::ostream& out, const std::vector<double>& sorted_desc);

// Plain consistent hashing with n balls in n bins; normalized loads sorted
// descending, one vector per n.
std::vector<std::vector<double>> run_baseline_distribution(const std::vector<std::size_t>& n_values, std::uint64_t seed,
                                                           HashKind hash = HashKind::Poly5);

struct BenchSpec {
    std::size_t n = 10000;
    std::string ratio = "1";
    std::string epsilon = "0.5";
    std::size_t ops = 100000;
    std::uint64_t seed = 1;
    ForwardPolicy policy = ForwardPolicy::NewestBall;
    HashKind hash = HashKind::Poly5;
};

struct BenchResult {
    std::size_t ops = 0;
    double seconds = 0;
    double ops_per_sec = 0;
    double mean_moves = 0;
    std::size_t p99_moves = 0;
    std::size_t max_moves = 0;
};

BenchResult run_bench(const BenchSpec& spec);

}  // namespace bch::sim
