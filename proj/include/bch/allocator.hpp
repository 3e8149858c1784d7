#pragma once

#include "bch/hashing.hpp"
#include "bch/oracle.hpp"
#include "bch/permutation.hpp"
#include "bch/ring.hpp"
#include "bch/schedule.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace bch {

// Which ball leaves an overfull bin, and which passing ball fills a hole.
//
// NewestBall forwards the most recent arrival, so a new ball walks straight
// to the first non-full bin (simple insertion). Holes take the first passing
// ball found scanning forward.
//
// HighestPermutedId forwards the ball with the highest permuted id and fills
// a hole with the lowest-permuted passing ball. The resulting placement
// depends only on the current balls and bins.
enum class ForwardPolicy { NewestBall, HighestPermutedId };

ForwardPolicy parse_forward_policy(std::string_view name);
std::string_view to_string(ForwardPolicy policy) noexcept;

// A legal forwarding order: a policy, or a seeded random choice of overfull
// bin and ball at every step.
struct ForwardOrder {
    ForwardPolicy policy = ForwardPolicy::NewestBall;
    std::optional<std::uint64_t> random_seed;
};

struct UpdateStats {
    std::size_t balls_moved = 0;       // other balls whose bin differs after the op (a bin op's own balls included)
    std::size_t forwardings = 0;       // single-bin hops plus hole-fill moves, the inserted ball's hops included
    std::size_t bins_visited = 0;
    std::size_t capacity_changes = 0;  // unit capacity steps
    std::size_t max_run_observed = 0;  // longest chain of consecutive full bins walked
    std::size_t transferred_out = 0;   // remove_bin only: hops out of the departing bin

    UpdateStats& operator+=(const UpdateStats& o);
};

struct Found {
    BinId bin;
    std::size_t visited;
};

struct NotFound {
    std::size_t visited;
    std::optional<BinId> insertion_bin;  // empty only when every bin is full
};

using SearchResult = std::variant<Found, NotFound>;

struct SettledReport {
    bool invariant1_ok = true;
    bool capacities_ok = true;
    bool schedule_ok = true;
    bool counters_ok = true;
    bool max_load_ok = true;
    std::vector<std::string> problems;

    bool all_ok() const noexcept {
        return invariant1_ok && capacities_ok && schedule_ok && counters_ok && max_load_ok;
    }
};

struct AllocatorConfig {
    CapacityRule rule = CapacityRule::balanced(Rational(5, 4));
    HashKind hash = HashKind::Poly5;
    std::uint64_t seed = 1;
    int range_bits = HashFamily::kDefaultRangeBits;
    ForwardPolicy policy = ForwardPolicy::NewestBall;
};

// Read-only view of a bin, for dumps and tests.
struct BinView {
    BinId id;
    std::uint64_t position;
    std::size_t capacity;
    std::size_t load;
    std::size_t forward_count;
    std::vector<std::pair<BinId, std::vector<BallId>>> origins;  // cyclic order, farthest origin first
};

// Consistent hashing with bounded loads.
//
// Balls and bins hash to a cycle; a ball belongs to the first bin at or after
// it but is forwarded past full bins. Between operations the state is
// settled: capacities follow the rule, no bin is overfull and no ball passes
// a non-full bin. Every mutating call leaves the state settled again.
//
// Not thread safe; one owner serializes all calls.
class Allocator {
public:
    explicit Allocator(AllocatorConfig config);

    UpdateStats insert_ball(BallId id);
    UpdateStats insert_ball_at(BallId id, std::uint64_t position);
    UpdateStats delete_ball(BallId id);
    UpdateStats add_bin(BinId id);
    UpdateStats add_bin_at(BinId id, std::uint64_t position);
    UpdateStats remove_bin(BinId id);

    SearchResult search(BallId id) const;
    SettledReport verify_settled() const;

    // Sets one bin's capacity outside the schedule and settles with the given
    // order. Afterwards verify_settled() reports schedule_ok = false until the
    // capacity is restored.
    UpdateStats set_bin_capacity(BinId id, std::size_t capacity, const ForwardOrder& order);

    std::size_t ball_count() const noexcept { return balls_.size(); }
    std::size_t bin_count() const noexcept { return bin_slots_.size(); }
    bool has_ball(BallId id) const { return balls_.contains(id); }
    bool has_bin(BinId id) const { return bin_slots_.contains(id); }

    BinId residence(BallId id) const;
    BinId hash_bin(BallId id) const;
    std::uint64_t ball_position(BallId id) const;
    std::size_t load(BinId id) const;
    std::size_t capacity(BinId id) const;
    std::size_t forward_count(BinId id) const;
    bool is_full(BinId id) const { return load(id) >= capacity(id); }
    BinView bin_view(BinId id) const;

    std::size_t max_load() const noexcept { return max_load_; }
    std::size_t total_capacity() const noexcept { return total_capacity_; }
    // ceil(c*m/n) for the current counts (the fixed capacity in fixed mode).
    std::size_t load_cap() const;

    // Bins in ring order starting from the lowest position.
    std::vector<BinId> bins_in_ring_order() const;
    std::vector<BallId> ball_ids() const;
    std::map<BallId, BinId> placement() const;
    std::map<BinId, std::size_t> loads() const;
    oracle::Snapshot snapshot() const;

    // Length of the longest run of consecutive full bins on the ring.
    std::size_t longest_full_run() const;

    const AllocatorConfig& config() const noexcept { return config_; }
    const HashFamily& ball_hash() const noexcept { return ball_hash_; }
    const HashFamily& bin_hash() const noexcept { return bin_hash_; }
    const IdPermutation& permutation() const noexcept { return permutation_; }
    const SuccessorIndex& index() const noexcept { return index_; }

    // Test hook for negative controls.
    void corrupt_forward_count_for_testing(BinId id, std::size_t value);

private:
    using Slot = std::uint32_t;
    static constexpr Slot kNoSlot = ~Slot{0};

    struct OriginGroup {
        Slot origin;
        std::vector<BallId> balls;
    };

    struct BinRecord {
        BinId id = 0;
        RingPoint point;
        std::size_t capacity = 0;
        std::size_t load = 0;
        std::size_t forward_count = 0;
        std::vector<OriginGroup> residents;
        std::vector<BallId> hashed;
        Slot next = kNoSlot;
        Slot prev = kNoSlot;
        bool active = false;
    };

    struct BallRecord {
        RingPoint point;
        Slot hash_bin = kNoSlot;
        Slot residence = kNoSlot;
        std::uint64_t priority = 0;
        std::uint64_t arrival = 0;
        std::uint64_t touched_in = 0;  // op stamp of the last op that moved this ball
        Slot residence_before = kNoSlot;
    };

    struct CapacityDelta {
        Slot slot;
        long delta;
    };

    Slot slot_of(BinId id) const;
    Slot hash_slot(const RingPoint& ball_point) const;
    void check_ball_id(BallId id) const;

    void set_load(BinRecord& bin, std::size_t load);
    void add_resident(Slot bin, BallId ball, Slot origin);
    void remove_resident(Slot bin, BallId ball, Slot origin);
    void relabel_origin(Slot bin, BallId ball, Slot from_origin, Slot to_origin);
    void forward_ball(Slot from, BallId ball);
    void pull_back(BallId ball, Slot from, Slot to);
    void note_move(BallRecord& rec, BallId ball, Slot from);
    void begin_op();
    std::size_t finish_op(std::optional<BallId> own_ball);

    BallId choose_forwarded(Slot bin);
    std::pair<BallId, Slot> choose_passer(Slot hole);
    void settle_overfull(Slot start);
    void fill_holes(Slot start);
    void step_capacity(Slot slot, long delta);
    void apply_deltas(const std::vector<CapacityDelta>& deltas, bool increases);

    std::vector<CapacityDelta> ball_op_deltas(std::size_t new_m) const;
    std::vector<CapacityDelta> bin_op_deltas(const std::vector<BinId>& new_order, std::size_t m) const;

    UpdateStats insert_ball_impl(BallId id, std::uint64_t position);
    UpdateStats add_bin_impl(BinId id, std::uint64_t position);

    AllocatorConfig config_;
    HashFamily ball_hash_;
    HashFamily bin_hash_;
    IdPermutation permutation_;
    SuccessorIndex index_;

    std::vector<BinRecord> bins_;
    std::vector<Slot> free_slots_;
    std::unordered_map<BinId, Slot> bin_slots_;
    std::unordered_map<BallId, BallRecord> balls_;
    std::vector<BinId> ordered_ids_;  // ascending; the linear order for big/small bins

    std::vector<std::size_t> load_histogram_;
    std::size_t max_load_ = 0;
    std::size_t total_capacity_ = 0;
    std::uint64_t arrival_clock_ = 0;
    std::uint64_t op_stamp_ = 0;
    std::vector<BallId> touched_;

    // Per-operation settlement context.
    UpdateStats* stats_ = nullptr;
    ForwardPolicy active_policy_;
    std::optional<std::mt19937_64> random_order_;
};

struct CapacityChangeMoves {
    std::size_t forwardings = 0;   // hops while decreasing C_plus -> C_minus
    std::size_t refill_moves = 0;  // hole-fill moves while increasing back
};

// Forwardings needed to lower `bin`'s capacity from c_plus to c_minus on a
// copy of `state`, plus the hole-fill moves of the reverse increase. The bin
// is first brought to c_plus if it is not there already. Throws
// InvalidOperation unless total capacity after the decrease stays strictly
// above the ball count.
CapacityChangeMoves capacity_change_moves(const Allocator& state, BinId bin, std::size_t c_minus, std::size_t c_plus,
                                          const ForwardOrder& order);

}  // namespace bch
