#include "bch/allocator.hpp"
#include "bch/errors.hpp"
#include "bch/oracle.hpp"
#include "bch/properties.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace bch;

TEST_SUITE("allocator") {

AllocatorConfig fixed_config(std::size_t capacity, ForwardPolicy policy = ForwardPolicy::NewestBall) {
    AllocatorConfig cfg;
    cfg.rule = CapacityRule::fixed_capacity(capacity);
    cfg.range_bits = 16;
    cfg.policy = policy;
    return cfg;
}

AllocatorConfig balanced_config(Rational c, ForwardPolicy policy = ForwardPolicy::NewestBall, std::uint64_t seed = 1) {
    AllocatorConfig cfg;
    cfg.rule = CapacityRule::balanced(c);
    cfg.seed = seed;
    cfg.policy = policy;
    return cfg;
}

std::map<BinId, std::size_t> oracle_loads(const Allocator& a) {
    const auto snap = a.snapshot();
    std::vector<BallId> order;
    for (const auto& b : snap.balls) order.push_back(b.id);
    return oracle::allocate(snap, oracle::InsertionSequence{order}).loads;
}

TEST_CASE("fresh state is settled") {
    Allocator a(balanced_config(Rational(3, 2)));
    CHECK(a.verify_settled().all_ok());
    CHECK_THROWS_AS(a.search(1), Error);
}

TEST_CASE("search in one empty bin") {
    Allocator a(balanced_config(Rational(3, 2)));
    a.add_bin(7);
    const auto r = a.search(123);
    REQUIRE(std::holds_alternative<NotFound>(r));
    CHECK(std::get<NotFound>(r).visited == 1);
    CHECK(std::get<NotFound>(r).insertion_bin == BinId{7});
}

TEST_CASE("insert then find") {
    Allocator a(balanced_config(Rational(3, 2)));
    for (BinId b = 0; b < 20; ++b) a.add_bin(b);
    for (BallId q = 0; q < 30; ++q) a.insert_ball(q);
    for (BallId q = 0; q < 30; ++q) {
        const auto r = a.search(q);
        REQUIRE(std::holds_alternative<Found>(r));
        CHECK(std::get<Found>(r).bin == a.residence(q));
    }
}

TEST_CASE("chain of unit bins") {
    Allocator a(fixed_config(1));
    a.add_bin_at(1, 100);
    a.add_bin_at(2, 200);
    a.add_bin_at(3, 300);
    a.insert_ball_at(101, 90);
    const auto st = a.insert_ball_at(102, 95);
    CHECK(st.forwardings == 1);
    CHECK(st.balls_moved == 0);
    CHECK(a.residence(101) == 1);
    CHECK(a.residence(102) == 2);
    const auto r = a.search(102);
    REQUIRE(std::holds_alternative<Found>(r));
    CHECK(std::get<Found>(r).bin == 2);
    CHECK(std::get<Found>(r).visited == 2);
    CHECK(a.forward_count(1) == 1);
}

TEST_CASE("new ball ahead of a full run walks to its end") {
    for (auto policy : {ForwardPolicy::NewestBall, ForwardPolicy::HighestPermutedId}) {
        Allocator a(fixed_config(1, policy));
        for (BinId b = 1; b <= 5; ++b) a.add_bin_at(b, 100 * b);
        a.insert_ball_at(11, 50);
        a.insert_ball_at(12, 60);
        a.insert_ball_at(13, 70);
        const auto st = a.insert_ball_at(14, 40);
        CHECK(st.forwardings == 3);
        CHECK(st.balls_moved <= 3);
        if (policy == ForwardPolicy::NewestBall) CHECK(st.balls_moved == 0);
        CHECK(a.loads() == oracle_loads(a));
        CHECK(a.load(4) == 1);
        CHECK(a.verify_settled().all_ok());

        a.delete_ball(11);
        CHECK(a.loads() == oracle_loads(a));
        CHECK(a.verify_settled().all_ok());
    }
}

TEST_CASE("capacity changes on ball insertion") {
    Allocator a(balanced_config(Rational(2, 1)));
    a.add_bin(0);
    const auto st = a.insert_ball(0);
    CHECK(st.balls_moved == 0);
    CHECK(st.capacity_changes == 1);
    CHECK(a.load(0) == 1);

    Allocator b(balanced_config(Rational(2, 1)));
    for (BinId i = 0; i < 4; ++i) b.add_bin(i);
    for (BallId q = 0; q < 6; ++q) b.insert_ball(q);
    const std::size_t before = b.total_capacity();
    CHECK(before == 12);
    b.insert_ball(6);
    CHECK(b.total_capacity() == before + 2);
}

TEST_CASE("capacities stay pinned at one while cm < n") {
    Allocator a(balanced_config(Rational(3, 2)));
    for (BinId i = 0; i < 10; ++i) a.add_bin(i);
    a.insert_ball(0);
    const auto st = a.insert_ball(1);
    CHECK(st.capacity_changes == 0);
    for (BinId i = 0; i < 10; ++i) CHECK(a.capacity(i) == 1);
}

TEST_CASE("deleting the only ball") {
    Allocator a(balanced_config(Rational(3, 2)));
    a.add_bin(0);
    a.add_bin(1);
    a.insert_ball(5);
    const auto st = a.delete_ball(5);
    CHECK(st.balls_moved == 0);
    CHECK(a.load(0) + a.load(1) == 0);
}

TEST_CASE("bin operations without balls move nothing") {
    Allocator a(balanced_config(Rational(3, 2)));
    CHECK(a.add_bin(1).balls_moved == 0);
    CHECK(a.add_bin(2).balls_moved == 0);
    CHECK(a.remove_bin(1).balls_moved == 0);
    CHECK(a.remove_bin(2).balls_moved == 0);
    CHECK(a.bin_count() == 0);
}

TEST_CASE("removing a bin transfers its balls to a roomy successor") {
    Allocator a(fixed_config(5));
    a.add_bin_at(1, 100);
    a.add_bin_at(2, 200);
    for (BallId q = 0; q < 3; ++q) a.insert_ball_at(q, 50 + q);
    const auto st = a.remove_bin(1);
    CHECK(st.transferred_out == 3);
    CHECK(st.balls_moved == 3);
    CHECK(a.load(2) == 3);
    CHECK(a.verify_settled().all_ok());
}

TEST_CASE("adding a bin ahead of a full run") {
    Allocator a(fixed_config(1));
    a.add_bin_at(1, 100);
    a.add_bin_at(2, 200);
    a.add_bin_at(3, 300);
    a.add_bin_at(4, 400);
    a.insert_ball_at(10, 90);
    a.insert_ball_at(11, 92);
    a.insert_ball_at(12, 94);
    a.add_bin_at(5, 96);
    CHECK(a.load(5) == 1);
    CHECK(a.load(3) == 0);
    CHECK(a.loads() == oracle_loads(a));
    CHECK(a.verify_settled().all_ok());
}

TEST_CASE("error cases") {
    Allocator a(balanced_config(Rational(3, 2)));
    CHECK_THROWS_AS(a.insert_ball(1), Error);
    a.add_bin(1);
    a.insert_ball(1);
    CHECK_THROWS_AS(a.insert_ball(1), Error);
    CHECK_THROWS_AS(a.delete_ball(2), Error);
    CHECK_THROWS_AS(a.add_bin(1), Error);
    CHECK_THROWS_AS(a.remove_bin(9), Error);
    try {
        a.remove_bin(1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidOperation);
    }
    CHECK_THROWS_AS(a.insert_ball(IdPermutation::prime), Error);
}

TEST_CASE("deleting and reinserting a ball restores the canonical state") {
    std::mt19937_64 rng(9);
    Allocator a(balanced_config(Rational(11, 10), ForwardPolicy::HighestPermutedId, 4));
    for (BinId i = 0; i < 40; ++i) a.add_bin(i);
    for (BallId q = 0; q < 120; ++q) a.insert_ball(q);
    for (int k = 0; k < 50; ++k) {
        const auto before = a.placement();
        const BallId q = rng() % 120;
        a.delete_ball(q);
        a.insert_ball(q);
        REQUIRE(a.placement() == before);
        const BinId b = rng() % 40;
        a.remove_bin(b);
        a.add_bin(b);
        REQUIRE(a.placement() == before);
    }
}

TEST_CASE("random churn keeps every settled state valid") {
    for (auto policy : {ForwardPolicy::NewestBall, ForwardPolicy::HighestPermutedId}) {
        std::mt19937_64 rng(21);
        Allocator a(balanced_config(Rational(6, 5), policy, 8));
        std::vector<BallId> balls;
        std::vector<BinId> bins;
        BallId next_ball = 0;
        BinId next_bin = 0;
        for (int i = 0; i < 10; ++i) {
            a.add_bin(next_bin);
            bins.push_back(next_bin++);
        }
        for (int op = 0; op < 10000; ++op) {
            const auto before = a.placement();
            UpdateStats st;
            std::optional<BallId> own;
            const auto r = rng() % 22;
            if (r < 10 && balls.size() < 300) {
                own = next_ball;
                st = a.insert_ball(next_ball);
                balls.push_back(next_ball++);
            } else if (r < 20 && !balls.empty()) {
                const std::size_t i = rng() % balls.size();
                own = balls[i];
                st = a.delete_ball(balls[i]);
                balls[i] = balls.back();
                balls.pop_back();
            } else if (r == 20 && bins.size() < 60) {
                st = a.add_bin(next_bin);
                bins.push_back(next_bin++);
            } else if (bins.size() > 1) {
                const std::size_t i = rng() % bins.size();
                st = a.remove_bin(bins[i]);
                bins[i] = bins.back();
                bins.pop_back();
            }
            std::size_t changed = 0;
            for (const auto& [ball, bin] : a.placement()) {
                auto it = before.find(ball);
                if (it != before.end() && ball != own && it->second != bin) ++changed;
            }
            REQUIRE(st.balls_moved == changed);
            REQUIRE(st.balls_moved <= st.forwardings);
            const auto report = a.verify_settled();
            CAPTURE(op);
            REQUIRE_MESSAGE(report.all_ok(), (report.problems.empty() ? "" : report.problems.front()));
            if (op % 100 == 0) REQUIRE(a.loads() == oracle_loads(a));
        }
    }
}

TEST_CASE("corrupted counter is detected") {
    Allocator a(balanced_config(Rational(5, 4)));
    for (BinId i = 0; i < 8; ++i) a.add_bin(i);
    for (BallId q = 0; q < 20; ++q) a.insert_ball(q);
    REQUIRE(a.verify_settled().all_ok());
    a.corrupt_forward_count_for_testing(3, a.forward_count(3) + 1);
    const auto r = a.verify_settled();
    CHECK_FALSE(r.counters_ok);
    CHECK_FALSE(r.all_ok());

    props::SuiteReport report;
    std::mt19937_64 rng(1);
    props::check_state(a, {}, rng, report);
    CHECK_FALSE(report.find(props::kCounters)->ok());
    CHECK(report.find(props::kLoadsMatchOracle)->ok());
}

TEST_CASE("capacity decrease on a roomy bin forwards nothing") {
    Allocator a(fixed_config(4));
    a.add_bin_at(1, 100);
    a.add_bin_at(2, 200);
    a.insert_ball_at(1, 50);
    const auto moves = capacity_change_moves(a, 1, 2, 4, {});
    CHECK(moves.forwardings == 0);
    CHECK(moves.refill_moves == 0);
    // 7 balls against a total of 4 after the drop.
    for (BallId q = 2; q <= 7; ++q) a.insert_ball_at(q, 50 + q);
    CHECK_THROWS_AS(capacity_change_moves(a, 1, 0, 4, {}), Error);
}

TEST_CASE("capacity decrease count is the same for every forwarding order") {
    props::CapacityChangeConfig cfg;
    cfg.snapshots = 60;
    const auto report = props::run_capacity_change_suite(cfg);
    CHECK(report.find(props::kForwardingsOrderFree)->checks == 60);
    CHECK(report.all_ok());
}

TEST_CASE("small random sequences match the oracle") {
    props::SequenceConfig cfg;
    cfg.trials = 100;
    CHECK(props::run_sequence_suite(cfg).all_ok());
    cfg.policy = ForwardPolicy::HighestPermutedId;
    cfg.check.canonical = true;
    cfg.hash = HashKind::SimpleTabulation;
    CHECK(props::run_sequence_suite(cfg).all_ok());
}

}
