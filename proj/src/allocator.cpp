#include "bch/allocator.hpp"

#include "bch/errors.hpp"

#include <algorithm>
#include <limits>
#include <string>

namespace bch {

ForwardPolicy parse_forward_policy(std::string_view name) {
    if (name == "newest") return ForwardPolicy::NewestBall;
    if (name == "permuted") return ForwardPolicy::HighestPermutedId;
    throw Error(ErrorCode::InvalidArgument, "unknown forward policy: " + std::string(name));
}

std::string_view to_string(ForwardPolicy policy) noexcept {
    return policy == ForwardPolicy::NewestBall ? "newest" : "permuted";
}

UpdateStats& UpdateStats::operator+=(const UpdateStats& o) {
    balls_moved += o.balls_moved;
    forwardings += o.forwardings;
    bins_visited += o.bins_visited;
    capacity_changes += o.capacity_changes;
    max_run_observed = std::max(max_run_observed, o.max_run_observed);
    transferred_out += o.transferred_out;
    return *this;
}

namespace {

// Owns the per-operation stats pointer for the duration of one update.
class StatsScope {
public:
    StatsScope(UpdateStats*& slot, UpdateStats& stats) : slot_(slot) { slot_ = &stats; }
    ~StatsScope() { slot_ = nullptr; }
    StatsScope(const StatsScope&) = delete;
    StatsScope& operator=(const StatsScope&) = delete;

private:
    UpdateStats*& slot_;
};

}  // namespace

Allocator::Allocator(AllocatorConfig config)
    : config_(config),
      ball_hash_(config.hash, 0, config.range_bits),
      bin_hash_(config.hash, 0, config.range_bits),
      permutation_(1, 0),
      index_(config.range_bits),
      active_policy_(config.policy) {
    SystemHashes hashes = derive_system_hashes(config.hash, config.seed, config.range_bits);
    ball_hash_ = hashes.balls;
    bin_hash_ = hashes.bins;
    permutation_ = IdPermutation::from_seed(hashes.permutation_seed);
    load_histogram_.assign(1, 0);
}

// ---------------------------------------------------------------------------
// Lookups

Allocator::Slot Allocator::slot_of(BinId id) const {
    auto it = bin_slots_.find(id);
    if (it == bin_slots_.end()) throw Error(ErrorCode::NotFound, "no bin with id " + std::to_string(id));
    return it->second;
}

Allocator::Slot Allocator::hash_slot(const RingPoint& ball_point) const {
    return bin_slots_.at(index_.successor(ball_point).id);
}

void Allocator::check_ball_id(BallId id) const {
    if (id >= IdPermutation::prime) throw Error(ErrorCode::InvalidArgument, "ball id exceeds the permutation prime");
}

BinId Allocator::residence(BallId id) const {
    auto it = balls_.find(id);
    if (it == balls_.end()) throw Error(ErrorCode::NotFound, "no ball with id " + std::to_string(id));
    return bins_[it->second.residence].id;
}

BinId Allocator::hash_bin(BallId id) const {
    auto it = balls_.find(id);
    if (it == balls_.end()) throw Error(ErrorCode::NotFound, "no ball with id " + std::to_string(id));
    return bins_[it->second.hash_bin].id;
}

std::uint64_t Allocator::ball_position(BallId id) const {
    auto it = balls_.find(id);
    if (it == balls_.end()) throw Error(ErrorCode::NotFound, "no ball with id " + std::to_string(id));
    return it->second.point.position;
}

std::size_t Allocator::load(BinId id) const { return bins_[slot_of(id)].load; }
std::size_t Allocator::capacity(BinId id) const { return bins_[slot_of(id)].capacity; }
std::size_t Allocator::forward_count(BinId id) const { return bins_[slot_of(id)].forward_count; }

std::size_t Allocator::load_cap() const {
    if (bin_slots_.empty()) return 0;
    return config_.rule.load_cap(balls_.size(), bin_slots_.size());
}

BinView Allocator::bin_view(BinId id) const {
    const BinRecord& b = bins_[slot_of(id)];
    BinView v{b.id, b.point.position, b.capacity, b.load, b.forward_count, {}};
    for (const auto& g : b.residents) {
        std::vector<BallId> balls = g.balls;
        std::sort(balls.begin(), balls.end());
        v.origins.emplace_back(bins_[g.origin].id, std::move(balls));
    }
    return v;
}

std::vector<BinId> Allocator::bins_in_ring_order() const {
    std::vector<BinId> out;
    for (const auto& p : index_.points()) out.push_back(p.id);
    return out;
}

std::vector<BallId> Allocator::ball_ids() const {
    std::vector<BallId> out;
    out.reserve(balls_.size());
    for (const auto& [id, rec] : balls_) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
}

std::map<BallId, BinId> Allocator::placement() const {
    std::map<BallId, BinId> out;
    for (const auto& [id, rec] : balls_) out[id] = bins_[rec.residence].id;
    return out;
}

std::map<BinId, std::size_t> Allocator::loads() const {
    std::map<BinId, std::size_t> out;
    for (const auto& [id, slot] : bin_slots_) out[id] = bins_[slot].load;
    return out;
}

oracle::Snapshot Allocator::snapshot() const {
    oracle::Snapshot s;
    s.balls.reserve(balls_.size());
    for (const auto& [id, rec] : balls_) s.balls.push_back({id, rec.point.position});
    std::sort(s.balls.begin(), s.balls.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    for (BinId id : ordered_ids_) {
        const BinRecord& b = bins_[bin_slots_.at(id)];
        s.bins.push_back({id, b.point.position, b.capacity});
    }
    return s;
}

std::size_t Allocator::longest_full_run() const {
    if (bin_slots_.empty()) return 0;
    Slot start = kNoSlot;
    for (const auto& [id, slot] : bin_slots_) {
        if (bins_[slot].load < bins_[slot].capacity) {
            start = slot;
            break;
        }
    }
    if (start == kNoSlot) return bin_slots_.size();
    std::size_t best = 0, run = 0;
    Slot s = bins_[start].next;
    for (std::size_t k = 0; k < bin_slots_.size(); ++k, s = bins_[s].next) {
        run = bins_[s].load >= bins_[s].capacity ? run + 1 : 0;
        best = std::max(best, run);
    }
    return best;
}

void Allocator::corrupt_forward_count_for_testing(BinId id, std::size_t value) {
    bins_[slot_of(id)].forward_count = value;
}

// ---------------------------------------------------------------------------
// Resident bookkeeping

void Allocator::set_load(BinRecord& bin, std::size_t load) {
    --load_histogram_[bin.load];
    if (load >= load_histogram_.size()) load_histogram_.resize(load + 1, 0);
    ++load_histogram_[load];
    bin.load = load;
    if (load > max_load_) {
        max_load_ = load;
    } else {
        while (max_load_ > 0 && load_histogram_[max_load_] == 0) --max_load_;
    }
}

void Allocator::add_resident(Slot bin, BallId ball, Slot origin) {
    BinRecord& b = bins_[bin];
    auto& groups = b.residents;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const OriginGroup& g) { return g.origin == origin; });
    if (it != groups.end()) {
        it->balls.push_back(ball);
    } else {
        const RingPoint& anchor = b.point;
        const RingPoint& op = bins_[origin].point;
        auto pos = std::find_if(groups.begin(), groups.end(),
                                [&](const OriginGroup& g) { return cyclic_before(anchor, op, bins_[g.origin].point); });
        groups.insert(pos, OriginGroup{origin, {ball}});
    }
    set_load(b, b.load + 1);
}

void Allocator::remove_resident(Slot bin, BallId ball, Slot origin) {
    BinRecord& b = bins_[bin];
    auto& groups = b.residents;
    auto it = std::find_if(groups.begin(), groups.end(), [&](const OriginGroup& g) { return g.origin == origin; });
    if (it == groups.end()) throw std::logic_error("resident group missing");
    auto bit = std::find(it->balls.begin(), it->balls.end(), ball);
    if (bit == it->balls.end()) throw std::logic_error("resident ball missing");
    *bit = it->balls.back();
    it->balls.pop_back();
    if (it->balls.empty()) groups.erase(it);
    set_load(b, b.load - 1);
}

void Allocator::relabel_origin(Slot bin, BallId ball, Slot from_origin, Slot to_origin) {
    remove_resident(bin, ball, from_origin);
    add_resident(bin, ball, to_origin);
}

void Allocator::forward_ball(Slot from, BallId ball) {
    BallRecord& rec = balls_.at(ball);
    const Slot to = bins_[from].next;
    remove_resident(from, ball, rec.hash_bin);
    add_resident(to, ball, rec.hash_bin);
    ++bins_[from].forward_count;
    note_move(rec, ball, from);
    rec.residence = to;
    rec.arrival = ++arrival_clock_;
}

void Allocator::pull_back(BallId ball, Slot from, Slot to) {
    BallRecord& rec = balls_.at(ball);
    for (Slot s = to; s != from; s = bins_[s].next) --bins_[s].forward_count;
    remove_resident(from, ball, rec.hash_bin);
    add_resident(to, ball, rec.hash_bin);
    note_move(rec, ball, from);
    rec.residence = to;
    rec.arrival = ++arrival_clock_;
}

void Allocator::note_move(BallRecord& rec, BallId ball, Slot from) {
    ++stats_->forwardings;
    if (rec.touched_in != op_stamp_) {
        rec.touched_in = op_stamp_;
        rec.residence_before = from;
        touched_.push_back(ball);
    }
}

void Allocator::begin_op() {
    ++op_stamp_;
    touched_.clear();
}

std::size_t Allocator::finish_op(std::optional<BallId> own_ball) {
    std::size_t moved = 0;
    for (BallId ball : touched_) {
        if (own_ball && ball == *own_ball) continue;
        const BallRecord& rec = balls_.at(ball);
        if (rec.residence != rec.residence_before) ++moved;
    }
    touched_.clear();
    return moved;
}

// ---------------------------------------------------------------------------
// Settlement

BallId Allocator::choose_forwarded(Slot bin) {
    const BinRecord& b = bins_[bin];
    if (random_order_) {
        std::uniform_int_distribution<std::size_t> pick(0, b.load - 1);
        std::size_t k = pick(*random_order_);
        for (const auto& g : b.residents) {
            if (k < g.balls.size()) return g.balls[k];
            k -= g.balls.size();
        }
        throw std::logic_error("load does not match residents");
    }
    BallId best = 0;
    std::uint64_t best_key = 0;
    bool have = false;
    for (const auto& g : b.residents) {
        for (BallId id : g.balls) {
            const BallRecord& rec = balls_.at(id);
            const std::uint64_t key = active_policy_ == ForwardPolicy::NewestBall ? rec.arrival : rec.priority;
            if (!have || key > best_key) {
                best = id;
                best_key = key;
                have = true;
            }
        }
    }
    if (!have) throw std::logic_error("forwarding from an empty bin");
    return best;
}

std::pair<BallId, Allocator::Slot> Allocator::choose_passer(Slot hole) {
    const RingPoint& hole_point = bins_[hole].point;
    const std::size_t n = bin_slots_.size();
    auto passes = [&](Slot resident_bin, Slot origin) {
        return origin == hole || cyclic_before(bins_[resident_bin].point, bins_[origin].point, hole_point);
    };

    std::size_t steps = 0;
    Slot y = bins_[hole].next;
    if (active_policy_ == ForwardPolicy::NewestBall || random_order_) {
        while (true) {
            ++steps;
            ++stats_->bins_visited;
            const auto& groups = bins_[y].residents;
            if (!groups.empty() && passes(y, groups.front().origin)) {
                stats_->max_run_observed = std::max(stats_->max_run_observed, steps);
                return {groups.front().balls.back(), y};
            }
            if (steps > n) throw std::logic_error("forward count promised a passing ball that does not exist");
            y = bins_[y].next;
        }
    }

    std::size_t remaining = bins_[hole].forward_count;
    BallId best = 0;
    Slot best_bin = kNoSlot;
    std::uint64_t best_priority = std::numeric_limits<std::uint64_t>::max();
    while (remaining > 0) {
        ++steps;
        ++stats_->bins_visited;
        for (const auto& g : bins_[y].residents) {
            if (!passes(y, g.origin)) break;
            for (BallId id : g.balls) {
                const std::uint64_t p = balls_.at(id).priority;
                if (best_bin == kNoSlot || p < best_priority) {
                    best = id;
                    best_bin = y;
                    best_priority = p;
                }
            }
            remaining -= std::min(remaining, g.balls.size());
        }
        if (steps > n) throw std::logic_error("forward count exceeds passing balls");
        y = bins_[y].next;
    }
    stats_->max_run_observed = std::max(stats_->max_run_observed, steps);
    return {best, best_bin};
}

void Allocator::settle_overfull(Slot start) {
    const std::size_t n = bin_slots_.size();
    if (random_order_) {
        std::vector<Slot> overfull;
        if (bins_[start].load > bins_[start].capacity) overfull.push_back(start);
        while (!overfull.empty()) {
            std::uniform_int_distribution<std::size_t> pick(0, overfull.size() - 1);
            const std::size_t i = pick(*random_order_);
            const Slot x = overfull[i];
            forward_ball(x, choose_forwarded(x));
            const Slot y = bins_[x].next;
            if (bins_[x].load <= bins_[x].capacity) {
                overfull[i] = overfull.back();
                overfull.pop_back();
            }
            if (bins_[y].load > bins_[y].capacity && std::find(overfull.begin(), overfull.end(), y) == overfull.end()) {
                overfull.push_back(y);
            }
        }
        return;
    }

    std::size_t run = 0;
    Slot x = start;
    while (bins_[x].load > bins_[x].capacity) {
        while (bins_[x].load > bins_[x].capacity) forward_ball(x, choose_forwarded(x));
        ++run;
        ++stats_->bins_visited;
        if (run > n) throw std::logic_error("overfull forwarding wrapped the whole ring");
        x = bins_[x].next;
    }
    stats_->max_run_observed = std::max(stats_->max_run_observed, run);
}

void Allocator::fill_holes(Slot start) {
    std::vector<Slot> pending{start};
    while (!pending.empty()) {
        const Slot x = pending.back();
        const BinRecord& b = bins_[x];
        if (b.load < b.capacity && b.forward_count > 0) {
            const auto [ball, from] = choose_passer(x);
            pull_back(ball, from, x);
            pending.push_back(from);
        } else {
            pending.pop_back();
        }
    }
}

void Allocator::step_capacity(Slot slot, long delta) {
    for (; delta > 0; --delta) {
        ++bins_[slot].capacity;
        ++total_capacity_;
        ++stats_->capacity_changes;
        fill_holes(slot);
    }
    for (; delta < 0; ++delta) {
        --bins_[slot].capacity;
        --total_capacity_;
        ++stats_->capacity_changes;
        if (bins_[slot].load > bins_[slot].capacity) settle_overfull(slot);
    }
}

void Allocator::apply_deltas(const std::vector<CapacityDelta>& deltas, bool increases) {
    for (const auto& d : deltas) {
        if ((d.delta > 0) == increases) step_capacity(d.slot, d.delta);
    }
}

std::vector<Allocator::CapacityDelta> Allocator::ball_op_deltas(std::size_t new_m) const {
    std::vector<CapacityDelta> out;
    const std::size_t n = bin_slots_.size();
    if (n == 0 || config_.rule.fixed) return out;
    const std::size_t m = balls_.size();
    const std::uint64_t t_old = config_.rule.c.ceil_mul(m);
    const std::uint64_t t_new = config_.rule.c.ceil_mul(new_m);
    const std::uint64_t lo = std::min(t_old, t_new);
    const std::uint64_t hi = std::max(t_old, t_new);

    // Rank i holds max(1, #{j < T : j = i mod n}), so only ranks congruent to
    // some j in [lo, hi) can change.
    std::vector<std::size_t> ranks;
    if (hi - lo >= n) {
        ranks.resize(n);
        for (std::size_t i = 0; i < n; ++i) ranks[i] = i;
    } else {
        for (std::uint64_t j = lo; j < hi; ++j) ranks.push_back(static_cast<std::size_t>(j % n));
        std::sort(ranks.begin(), ranks.end());
        ranks.erase(std::unique(ranks.begin(), ranks.end()), ranks.end());
    }
    for (std::size_t rank : ranks) {
        const Slot slot = bin_slots_.at(ordered_ids_[rank]);
        const std::size_t want = config_.rule.capacity_at(rank, new_m, n);
        const long delta = static_cast<long>(want) - static_cast<long>(bins_[slot].capacity);
        if (delta != 0) out.push_back({slot, delta});
    }
    return out;
}

std::vector<Allocator::CapacityDelta> Allocator::bin_op_deltas(const std::vector<BinId>& new_order, std::size_t m) const {
    std::vector<CapacityDelta> out;
    const std::size_t n = new_order.size();
    if (n == 0) return out;
    const std::size_t big = config_.rule.big_bin_count(m, n);
    const std::size_t big_cap = config_.rule.capacity_at(0, m, n);
    const std::size_t small_cap = config_.rule.capacity_at(n - 1, m, n);
    for (std::size_t rank = 0; rank < n; ++rank) {
        auto it = bin_slots_.find(new_order[rank]);
        if (it == bin_slots_.end()) continue;
        const std::size_t want = rank < big ? big_cap : small_cap;
        const long delta = static_cast<long>(want) - static_cast<long>(bins_[it->second].capacity);
        if (delta != 0) out.push_back({it->second, delta});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Updates

UpdateStats Allocator::insert_ball(BallId id) {
    check_ball_id(id);
    return insert_ball_impl(id, ball_hash_(id));
}

UpdateStats Allocator::insert_ball_at(BallId id, std::uint64_t position) {
    check_ball_id(id);
    if (position >= ball_hash_.range()) throw Error(ErrorCode::InvalidArgument, "ball position outside the hash range");
    return insert_ball_impl(id, position);
}

UpdateStats Allocator::insert_ball_impl(BallId id, std::uint64_t position) {
    if (balls_.contains(id)) throw Error(ErrorCode::AlreadyPresent, "ball " + std::to_string(id) + " already present");
    if (bin_slots_.empty()) throw Error(ErrorCode::EmptySystem, "cannot insert a ball without bins");
    const std::size_t m = balls_.size();
    if (config_.rule.fixed && m + 1 > total_capacity_) throw Error(ErrorCode::Infeasible, "fixed capacities are exhausted");

    UpdateStats st;
    StatsScope scope(stats_, st);
    begin_op();
    const auto deltas = ball_op_deltas(m + 1);
    apply_deltas(deltas, true);

    const RingPoint point = RingPoint::ball(position, id);
    const Slot h = hash_slot(point);
    ++st.bins_visited;
    balls_.emplace(id, BallRecord{point, h, h, permutation_(id), ++arrival_clock_});
    bins_[h].hashed.push_back(id);
    add_resident(h, id, h);
    settle_overfull(h);

    apply_deltas(deltas, false);
    st.balls_moved = finish_op(id);
    return st;
}

UpdateStats Allocator::delete_ball(BallId id) {
    auto it = balls_.find(id);
    if (it == balls_.end()) throw Error(ErrorCode::NotFound, "no ball with id " + std::to_string(id));
    const std::size_t m = balls_.size();

    UpdateStats st;
    StatsScope scope(stats_, st);
    begin_op();
    const auto deltas = ball_op_deltas(m - 1);

    const BallRecord rec = it->second;
    auto& hashed = bins_[rec.hash_bin].hashed;
    *std::find(hashed.begin(), hashed.end(), id) = hashed.back();
    hashed.pop_back();
    remove_resident(rec.residence, id, rec.hash_bin);
    for (Slot s = rec.hash_bin; s != rec.residence; s = bins_[s].next) {
        --bins_[s].forward_count;
        ++st.bins_visited;
    }
    balls_.erase(it);
    ++st.bins_visited;
    fill_holes(rec.residence);

    apply_deltas(deltas, true);
    apply_deltas(deltas, false);
    st.balls_moved = finish_op(std::nullopt);
    return st;
}

UpdateStats Allocator::add_bin(BinId id) { return add_bin_impl(id, bin_hash_(id)); }

UpdateStats Allocator::add_bin_at(BinId id, std::uint64_t position) {
    if (position >= bin_hash_.range()) throw Error(ErrorCode::InvalidArgument, "bin position outside the hash range");
    return add_bin_impl(id, position);
}

UpdateStats Allocator::add_bin_impl(BinId id, std::uint64_t position) {
    if (bin_slots_.contains(id)) throw Error(ErrorCode::AlreadyPresent, "bin " + std::to_string(id) + " already present");
    if (bin_slots_.size() + 1 > bin_hash_.range()) throw Error(ErrorCode::InvalidOperation, "hash range smaller than the bin count");
    const std::size_t m = balls_.size();

    std::vector<BinId> new_order = ordered_ids_;
    const auto rank_it = std::lower_bound(new_order.begin(), new_order.end(), id);
    const std::size_t rank = static_cast<std::size_t>(rank_it - new_order.begin());
    new_order.insert(rank_it, id);

    UpdateStats st;
    StatsScope scope(stats_, st);
    begin_op();
    const auto deltas = bin_op_deltas(new_order, m);
    const std::size_t target = config_.rule.capacity_at(rank, m, new_order.size());

    Slot slot;
    if (!free_slots_.empty()) {
        slot = free_slots_.back();
        free_slots_.pop_back();
    } else {
        slot = static_cast<Slot>(bins_.size());
        bins_.emplace_back();
    }
    BinRecord& b = bins_[slot];
    b = BinRecord{};
    b.id = id;
    b.point = RingPoint::bin(position, id);
    b.active = true;
    ++load_histogram_[0];

    if (index_.empty()) {
        b.next = b.prev = slot;
    } else {
        const Slot succ = bin_slots_.at(index_.successor(b.point).id);
        const Slot pred = bins_[succ].prev;
        ++st.bins_visited;
        bins_[slot].next = succ;
        bins_[slot].prev = pred;
        bins_[pred].next = slot;
        bins_[succ].prev = slot;

        // Balls in (pred, new] used to hash to succ and now hash to the new bin.
        auto& old_hashed = bins_[succ].hashed;
        const RingPoint anchor = bins_[pred].point;
        const RingPoint new_point = bins_[slot].point;
        std::vector<BallId> keep;
        for (BallId ball : old_hashed) {
            BallRecord& rec = balls_.at(ball);
            if (cyclic_before(anchor, rec.point, new_point)) {
                rec.hash_bin = slot;
                relabel_origin(rec.residence, ball, succ, slot);
                bins_[slot].hashed.push_back(ball);
            } else {
                keep.push_back(ball);
            }
        }
        old_hashed = std::move(keep);
        // Everything passing pred, and everything hashing here, sits beyond
        // the still-empty new bin.
        bins_[slot].forward_count = bins_[pred].forward_count + bins_[slot].hashed.size();
    }
    index_.insert(bins_[slot].point);
    bin_slots_.emplace(id, slot);
    ordered_ids_ = std::move(new_order);

    bins_[slot].capacity = target;
    total_capacity_ += target;
    fill_holes(slot);

    apply_deltas(deltas, true);
    apply_deltas(deltas, false);
    st.balls_moved = finish_op(std::nullopt);
    return st;
}

UpdateStats Allocator::remove_bin(BinId id) {
    const Slot d = slot_of(id);
    const std::size_t n = bin_slots_.size();
    const std::size_t m = balls_.size();
    if (n == 1 && m > 0) throw Error(ErrorCode::InvalidOperation, "cannot remove the last bin while balls remain");
    if (config_.rule.fixed && m > (n - 1) * *config_.rule.fixed) {
        throw Error(ErrorCode::Infeasible, "remaining fixed capacity cannot hold the balls");
    }

    std::vector<BinId> new_order = ordered_ids_;
    new_order.erase(std::lower_bound(new_order.begin(), new_order.end(), id));

    UpdateStats st;
    StatsScope scope(stats_, st);
    begin_op();
    const auto deltas = bin_op_deltas(new_order, m);
    apply_deltas(deltas, true);

    // Closing is a capacity drop to zero followed by ordinary forwarding.
    total_capacity_ -= bins_[d].capacity;
    bins_[d].capacity = 0;
    const std::size_t before = st.forwardings;
    const std::size_t departing_load = bins_[d].load;
    if (departing_load > 0) {
        // Move the departing bin's balls in one batch first so the hop count
        // out of it is exactly its load.
        while (bins_[d].load > 0) forward_ball(d, choose_forwarded(d));
        st.transferred_out = st.forwardings - before;
        ++st.bins_visited;
        settle_overfull(bins_[d].next);
    }

    if (n > 1) {
        const Slot succ = bins_[d].next;
        const Slot pred = bins_[d].prev;
        for (BallId ball : bins_[d].hashed) {
            BallRecord& rec = balls_.at(ball);
            rec.hash_bin = succ;
            relabel_origin(rec.residence, ball, d, succ);
            bins_[succ].hashed.push_back(ball);
        }
        bins_[pred].next = succ;
        bins_[succ].prev = pred;
    }
    index_.remove(bins_[d].point);
    --load_histogram_[0];
    while (max_load_ > 0 && load_histogram_[max_load_] == 0) --max_load_;
    bin_slots_.erase(id);
    ordered_ids_ = std::move(new_order);
    bins_[d] = BinRecord{};
    free_slots_.push_back(d);

    apply_deltas(deltas, false);
    st.balls_moved = finish_op(std::nullopt);
    return st;
}

UpdateStats Allocator::set_bin_capacity(BinId id, std::size_t capacity, const ForwardOrder& order) {
    const Slot slot = slot_of(id);
    const std::size_t current = bins_[slot].capacity;
    if (capacity < current && total_capacity_ - (current - capacity) < balls_.size()) {
        throw Error(ErrorCode::InvalidOperation, "capacity decrease leaves less capacity than balls");
    }
    UpdateStats st;
    StatsScope scope(stats_, st);
    begin_op();
    active_policy_ = order.policy;
    if (order.random_seed) random_order_.emplace(*order.random_seed);

    total_capacity_ = total_capacity_ - current + capacity;
    bins_[slot].capacity = capacity;
    st.capacity_changes = capacity > current ? capacity - current : current - capacity;
    if (capacity > current) {
        fill_holes(slot);
    } else if (bins_[slot].load > capacity) {
        settle_overfull(slot);
    }

    random_order_.reset();
    active_policy_ = config_.policy;
    st.balls_moved = finish_op(std::nullopt);
    return st;
}

// ---------------------------------------------------------------------------
// Queries

SearchResult Allocator::search(BallId id) const {
    if (bin_slots_.empty()) throw Error(ErrorCode::EmptySystem, "search in a system without bins");
    auto it = balls_.find(id);
    const RingPoint point = it != balls_.end() ? it->second.point : RingPoint::ball(ball_hash_(id), id);
    const Slot resident = it != balls_.end() ? it->second.residence : kNoSlot;

    Slot x = hash_slot(point);
    std::size_t visited = 0;
    for (std::size_t k = 0; k < bin_slots_.size(); ++k, x = bins_[x].next) {
        ++visited;
        if (x == resident) return Found{bins_[x].id, visited};
        if (bins_[x].load < bins_[x].capacity) return NotFound{visited, bins_[x].id};
    }
    return NotFound{visited, std::nullopt};
}

SettledReport Allocator::verify_settled() const {
    SettledReport r;
    auto fail = [&r](bool& flag, std::string msg) {
        flag = false;
        if (r.problems.size() < 32) r.problems.push_back(std::move(msg));
    };
    const std::size_t n = bin_slots_.size();
    const std::size_t m = balls_.size();

    // Ring links agree with the successor index.
    const auto ring = index_.points();
    if (ring.size() != n) fail(r.counters_ok, "index size differs from bin count");
    for (std::size_t i = 0; i < ring.size(); ++i) {
        auto a = bin_slots_.find(ring[i].id);
        auto b = bin_slots_.find(ring[(i + 1) % ring.size()].id);
        if (a == bin_slots_.end() || b == bin_slots_.end()) {
            fail(r.counters_ok, "index holds an unknown bin");
            continue;
        }
        if (bins_[a->second].next != b->second || bins_[b->second].prev != a->second) {
            fail(r.counters_ok, "ring links disagree with index order at bin " + std::to_string(ring[i].id));
        }
    }

    // Residents, origin groups and hashed lists.
    std::size_t grouped = 0, hashed_total = 0, cap_total = 0;
    std::vector<std::size_t> histogram(load_histogram_.size(), 0);
    std::size_t max_load = 0;
    for (const auto& [id, slot] : bin_slots_) {
        const BinRecord& b = bins_[slot];
        cap_total += b.capacity;
        std::size_t load = 0;
        for (std::size_t g = 0; g < b.residents.size(); ++g) {
            const auto& group = b.residents[g];
            if (group.balls.empty()) fail(r.counters_ok, "empty origin group");
            if (g > 0 && !cyclic_before(b.point, bins_[b.residents[g - 1].origin].point, bins_[group.origin].point)) {
                fail(r.counters_ok, "origin groups out of cyclic order in bin " + std::to_string(id));
            }
            for (BallId ball : group.balls) {
                auto it = balls_.find(ball);
                if (it == balls_.end() || it->second.residence != slot || it->second.hash_bin != group.origin) {
                    fail(r.counters_ok, "origin list entry for ball " + std::to_string(ball) + " is stale");
                }
            }
            load += group.balls.size();
        }
        if (load != b.load) fail(r.counters_ok, "load of bin " + std::to_string(id) + " differs from its residents");
        grouped += load;
        for (BallId ball : b.hashed) {
            auto it = balls_.find(ball);
            if (it == balls_.end() || it->second.hash_bin != slot) fail(r.counters_ok, "hashed list of bin " + std::to_string(id) + " is stale");
        }
        hashed_total += b.hashed.size();
        if (b.load < histogram.size()) ++histogram[b.load];
        max_load = std::max(max_load, b.load);
        if (b.load > b.capacity) fail(r.capacities_ok, "bin " + std::to_string(id) + " is overfull");
    }
    if (grouped != m || hashed_total != m) fail(r.counters_ok, "ball totals disagree with the ball map");
    if (n > 0 && (histogram != load_histogram_ || max_load != max_load_)) fail(r.counters_ok, "load histogram is stale");
    if (cap_total != total_capacity_) fail(r.counters_ok, "total capacity is stale");

    // Forward counts and Invariant 1, by walking every ball's path.
    std::vector<std::size_t> forward(bins_.size(), 0);
    for (const auto& [id, rec] : balls_) {
        if (n == 0) break;
        if (hash_slot(rec.point) != rec.hash_bin) fail(r.counters_ok, "ball " + std::to_string(id) + " has a stale hash bin");
        std::size_t steps = 0;
        for (Slot s = rec.hash_bin; s != rec.residence; s = bins_[s].next) {
            ++forward[s];
            if (bins_[s].load < bins_[s].capacity) {
                fail(r.invariant1_ok, "ball " + std::to_string(id) + " passes non-full bin " + std::to_string(bins_[s].id));
            }
            if (++steps > n) {
                fail(r.invariant1_ok, "ball " + std::to_string(id) + " path wraps the ring");
                break;
            }
        }
    }
    for (const auto& [id, slot] : bin_slots_) {
        if (forward[slot] != bins_[slot].forward_count) {
            fail(r.counters_ok, "forward count of bin " + std::to_string(id) + " is " + std::to_string(bins_[slot].forward_count) +
                                    ", recount gives " + std::to_string(forward[slot]));
        }
    }

    // Capacities follow the rule in ascending id order.
    if (n > 0) {
        if (ordered_ids_.size() != n || !std::is_sorted(ordered_ids_.begin(), ordered_ids_.end())) {
            fail(r.schedule_ok, "bin order list is stale");
        } else {
            for (std::size_t rank = 0; rank < n; ++rank) {
                auto it = bin_slots_.find(ordered_ids_[rank]);
                if (it == bin_slots_.end()) {
                    fail(r.schedule_ok, "bin order list holds an unknown bin");
                    continue;
                }
                if (bins_[it->second].capacity != config_.rule.capacity_at(rank, m, n)) {
                    fail(r.schedule_ok, "capacity of bin " + std::to_string(ordered_ids_[rank]) + " is off schedule");
                }
            }
        }
        const std::size_t bound = load_cap();
        if (max_load > bound) fail(r.max_load_ok, "max load " + std::to_string(max_load) + " exceeds " + std::to_string(bound));
    }
    return r;
}

// ---------------------------------------------------------------------------

CapacityChangeMoves capacity_change_moves(const Allocator& state, BinId bin, std::size_t c_minus, std::size_t c_plus,
                                          const ForwardOrder& order) {
    if (c_minus > c_plus) throw Error(ErrorCode::InvalidArgument, "capacity change expects c_minus <= c_plus");
    Allocator copy = state;
    if (copy.capacity(bin) != c_plus) copy.set_bin_capacity(bin, c_plus, ForwardOrder{order.policy, std::nullopt});
    if (copy.total_capacity() - (c_plus - c_minus) <= copy.ball_count()) {
        throw Error(ErrorCode::InvalidOperation, "total capacity must stay strictly above the load");
    }
    CapacityChangeMoves out;
    out.forwardings = copy.set_bin_capacity(bin, c_minus, order).forwardings;
    out.refill_moves = copy.set_bin_capacity(bin, c_plus, ForwardOrder{order.policy, std::nullopt}).forwardings;
    return out;
}

}  // namespace bch
