#include "bch/errors.hpp"
#include "bch/simulator.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace bch;
using namespace bch::sim;

TEST_SUITE("simulator") {

TEST_CASE("f bound") {
    CHECK(f_bound(0.5) == doctest::Approx(8.0));
    CHECK(f_bound(0.3) == doctest::Approx(22.2222).epsilon(1e-4));
    CHECK(f_bound(1) == doctest::Approx(1 + std::log(2.0) / 2));
    CHECK(f_bound(3) == doctest::Approx(1 + std::log(4.0) / 4));
    CHECK_THROWS_AS(f_bound(0), Error);
    CHECK_THROWS_AS(f_bound(-1), Error);
}

TEST_CASE("zero churn gives a distribution and empty move stats") {
    CellSpec spec;
    spec.n = 50;
    spec.ratio = "2";
    spec.epsilon = "0.5";
    spec.ops = 0;
    const auto r = run_cell(spec);
    CHECK(r.initial_m == 100);
    CHECK(r.ball.count == 0);
    CHECK(r.bin.count == 0);
    CHECK(r.distribution.size() == 50);
    CHECK(r.cap_violations == 0);
    CHECK(r.verified);
    double sum = 0;
    for (double x : r.distribution) sum += x;
    CHECK(sum / 50 == doctest::Approx(1.0));
    CHECK(r.distribution.front() <= 1.5 + 1e-9);
}

TEST_CASE("op mix counts are exact") {
    CellSpec spec;
    spec.n = 30;
    spec.ops = 2200;
    spec.verify_every = 100;
    const auto r = run_cell(spec);
    CHECK(r.ball_insert.count + r.ball_delete.count == 2000);
    CHECK(r.bin_add.count + r.bin_remove.count == 200);
    CHECK(r.verified);
    CHECK(r.cap_violations == 0);
    CHECK(r.visits.count > 0);
    CHECK(r.visits.mean >= 1.0);
}

TEST_CASE("infeasible cell") {
    CellSpec spec;
    spec.n = 0;
    CHECK_THROWS_AS(run_cell(spec), Error);
}

TEST_CASE("grid CSV has the declared schema and is deterministic") {
    GridSpec g;
    g.n_values = {20, 40};
    g.ratios = {"1"};
    g.epsilons = {"0.3", "1"};
    g.ops = 300;
    g.seed = 5;
    std::ostringstream a, b;
    write_grid_csv(a, run_grid(g));
    g.threads = 2;
    write_grid_csv(b, run_grid(g));
    CHECK(a.str() == b.str());

    std::istringstream in(a.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == kCsvHeader);
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 13);
    }
    CHECK(rows == 4 * 6);
}

TEST_CASE("empty grid lists are rejected") {
    GridSpec g;
    g.n_values = {10};
    g.ratios = {};
    g.epsilons = {"0.5"};
    CHECK_THROWS_AS(run_grid(g), Error);
}

TEST_CASE("baseline distributions") {
    const auto d = run_baseline_distribution({1, 200}, 3);
    REQUIRE(d.size() == 2);
    CHECK(d[0] == std::vector<double>{1.0});
    double sum = 0;
    for (double x : d[1]) sum += x;
    CHECK(sum == 200.0);
    CHECK(std::is_sorted(d[1].rbegin(), d[1].rend()));

    std::ostringstream out;
    write_distribution_csv(out, {2.0, 1.0});
    CHECK(out.str() == "rank_fraction,normalized_load\n0.000000,2.000000\n0.500000,1.000000\n");
}

TEST_CASE("bench runs") {
    BenchSpec b;
    b.n = 200;
    b.ops = 2000;
    const auto r = run_bench(b);
    CHECK(r.ops == 2000);
    CHECK(r.p99_moves <= r.max_moves);
}

}
