#include "bch/baseline.hpp"
#include "bch/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <vector>

using namespace bch;

TEST_SUITE("baseline") {

TEST_CASE("one bin takes everything") {
    PlainRing ring(HashKind::Poly5, 1);
    CHECK_THROWS_AS(ring.assign(5), Error);
    ring.add_bin(42);
    for (BallId b = 0; b < 100; ++b) CHECK(ring.assign(b) == 42);
}

TEST_CASE("assignment is pure and conserves balls") {
    PlainRing ring(HashKind::SimpleTabulation, 3);
    for (BinId i = 0; i < 10000; ++i) ring.add_bin(i);
    std::vector<BallId> balls(10000);
    std::iota(balls.begin(), balls.end(), 0);
    const auto loads = ring.loads(balls);
    std::size_t total = 0;
    for (const auto& [id, l] : loads) total += l;
    CHECK(total == balls.size());
    CHECK(ring.assign(17) == ring.assign(17));
}

TEST_CASE("mean load is m/n and the max is well above it") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        PlainRing ring(HashKind::Poly5, seed);
        for (BinId i = 0; i < 10000; ++i) ring.add_bin(i);
        std::vector<BallId> balls(10000);
        std::iota(balls.begin(), balls.end(), 0);
        const auto loads = ring.loads(balls);
        REQUIRE(loads.size() == 10000);
        std::size_t total = 0, top = 0;
        for (const auto& [id, l] : loads) {
            total += l;
            top = std::max(top, l);
        }
        CHECK(static_cast<double>(total) / static_cast<double>(loads.size()) == doctest::Approx(1.0).epsilon(0.05));
        CHECK(top >= 5);
    }
}

TEST_CASE("removing bins") {
    PlainRing ring(HashKind::Poly5, 1);
    ring.add_bin(1);
    ring.add_bin(2);
    ring.remove_bin(1);
    CHECK(ring.bin_count() == 1);
    CHECK(ring.assign(9) == 2);
    CHECK_THROWS_AS(ring.remove_bin(1), Error);
}

}
