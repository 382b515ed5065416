#include "latchkit/latch.hpp"

#include <algorithm>
#include <thread>

#include "latchkit/rng.hpp"

namespace latchkit {

namespace {

/// One bounded pause between polls of the state word; keeps the spin loop off
/// the interconnect without yielding the time slice.
inline void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(__i386__)
    __builtin_ia32_pause();
#elif defined(__aarch64__)
    asm volatile("yield");
#endif
}

}  // namespace

// ---- configuration ----------------------------------------------------------

void LatchConfig::validate() const {
    if (level < 0 || level > 14) {
        throw ConfigInvalid("latch '" + name + "': level " + std::to_string(level) +
                            " outside [0,14]");
    }
    if (class_id < 0 || class_id > 7) {
        throw ConfigInvalid("latch '" + name + "': class " + std::to_string(class_id) +
                            " outside [0,7]");
    }
    if (child_number && *child_number == 0) {
        throw ConfigInvalid("latch '" + name + "': child_number is 1-based");
    }
}

// ---- held set and ordering ---------------------------------------------------

bool HeldSet::remove(const void* latch) {
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
        if (it->latch == latch) {
            entries_.erase(std::next(it).base());
            return true;
        }
    }
    return false;
}

bool HeldSet::holds(const void* latch) const {
    return std::any_of(entries_.begin(), entries_.end(),
                       [latch](const Entry& e) { return e.latch == latch; });
}

void check_order(const HeldSet& held, const LatchConfig& target, const void* target_identity) {
    if (held.holds(target_identity)) {
        throw OrderViolation(target.level, target.level,
                             "latch '" + target.name + "' is already held by this process");
    }
    if (held.empty()) return;

    int max_level = held.entries().front().level;
    for (const auto& e : held.entries()) max_level = std::max(max_level, e.level);

    if (target.level > max_level) return;
    if (target.level < max_level) {
        throw OrderViolation(max_level, target.level, "levels must increase");
    }

    // Same level is legal only between two children of one family, taken in
    // decreasing child-number order.
    if (!target.child_number) {
        throw OrderViolation(max_level, target.level,
                             "same-level get on a latch without a child number");
    }
    std::uint32_t min_child = 0;
    bool have_child = false;
    for (const auto& e : held.entries()) {
        if (e.level != max_level) continue;
        if (!e.child_number) {
            throw OrderViolation(max_level, target.level,
                                 "same-level held latch is not a family child");
        }
        min_child = have_child ? std::min(min_child, *e.child_number) : *e.child_number;
        have_child = true;
    }
    if (*target.child_number >= min_child) {
        throw OrderViolation(max_level, target.level,
                             "child " + std::to_string(*target.child_number) +
                                 " not below held child " + std::to_string(min_child));
    }
}

// ---- latch -------------------------------------------------------------------

Latch::Latch(LatchConfig config, LatchTuning tuning)
    : config_(std::move(config)),
      tuning_(std::move(tuning)),
      fault_rng_(tuning_.fault_seed),
      epoch_(std::chrono::steady_clock::now()) {
    config_.validate();
    if (tuning_.post_loss_probability < 0.0 || tuning_.post_loss_probability > 1.0) {
        throw ConfigInvalid("post_loss_probability outside [0,1]");
    }
}

Latch::~Latch() = default;

void Latch::ensure_mode_supported(Mode mode) const {
    if (mode == Mode::Shared && !config_.shared) throw ModeUnsupported(config_.name);
}

void Latch::ensure_usable() const {
    if (poisoned_.load(std::memory_order_acquire)) throw Poisoned();
}

std::uint64_t Latch::spin_budget(Mode mode) const {
    return spin_budget_iterations(config_.shared, mode, tuning_.class_policy.spin,
                                  tuning_.spin_count);
}

bool Latch::raw_try_acquire(const AcquireContext& ctx) {
    std::uint64_t w = word_.load(std::memory_order_relaxed);
    if (!word::can_acquire(w, ctx.mode, config_.shared)) return false;
    std::uint64_t desired = word::acquired(w, ctx.mode, config_.shared, ctx.pid);
    if (!word_.compare_exchange_strong(w, desired, std::memory_order_acquire,
                                       std::memory_order_relaxed)) {
        return false;
    }
    bookkeep_acquired(ctx);
    return true;
}

void Latch::bookkeep_acquired(const AcquireContext& ctx) {
    last_where_.store(ctx.where_code, std::memory_order_relaxed);
    last_why_.store(ctx.why_code, std::memory_order_relaxed);
    if (config_.shared && ctx.mode == Mode::Shared) {
        std::lock_guard<std::mutex> lk(queue_mu_);
        shared_holders_.push_back(ctx.pid);
    }
}

bool Latch::try_get(const AcquireContext& ctx) {
    ensure_usable();
    ensure_mode_supported(ctx.mode);
    if (ctx.pid > word::kMaxPid) throw ConfigInvalid("pid exceeds the 29-bit state-word field");
    return raw_try_acquire(ctx);
}

bool Latch::get_nowait(const AcquireContext& ctx, HeldSet* held) {
    immediate_gets_.fetch_add(1, std::memory_order_relaxed);
    bool ok = try_get(ctx);
    if (!ok) {
        immediate_misses_.fetch_add(1, std::memory_order_relaxed);
    } else if (held) {
        held->add(config_.level, config_.child_number, this);
    }
    return ok;
}

bool Latch::spin_round(const AcquireContext& ctx, std::uint64_t budget,
                       std::uint64_t& iterations) {
    iterations = 0;
    if (budget == 0) return false;
    spinners_.fetch_add(1, std::memory_order_relaxed);
    bool got = false;
    while (iterations < budget) {
        ++iterations;
        // Poll without the bus-locking instruction; go atomic only when the
        // word looks admissible (test-and-test-and-set).
        std::uint64_t w = word_.load(std::memory_order_relaxed);
        if (word::can_acquire(w, ctx.mode, config_.shared) && raw_try_acquire(ctx)) {
            got = true;
            break;
        }
        cpu_relax();
    }
    spinners_.fetch_sub(1, std::memory_order_relaxed);
    return got;
}

void Latch::remove_or_consume(const NodePtr& node) {
    std::lock_guard<std::mutex> lk(queue_mu_);
    if (node->queued) {
        auto it = std::find(queue_.begin(), queue_.end(), node);
        if (it != queue_.end()) queue_.erase(it);
        node->queued = false;
        waiter_count_.fetch_sub(1, std::memory_order_relaxed);
    } else if (node->posted) {
        // We got the latch another way after the releaser already picked us:
        // absorb the pending wakeup so it cannot leak into a later episode.
        node->sem.try_acquire();
    }
}

AcquisitionReport Latch::get_wait(const AcquireContext& ctx, HeldSet& held) {
    ensure_usable();
    ensure_mode_supported(ctx.mode);
    if (ctx.pid > word::kMaxPid) throw ConfigInvalid("pid exceeds the 29-bit state-word field");
    check_order(held, config_, this);

    AcquisitionReport rep;

    // Phase 1: immediate get.
    if (raw_try_acquire(ctx)) {
        gets_.fetch_add(1, std::memory_order_relaxed);
        held.add(config_.level, config_.child_number, this);
        return rep;
    }
    rep.missed = true;

    const std::uint64_t budget = spin_budget(ctx.mode);
    unsigned n_wait = 0;  // ordinal of the next sleep within this acquisition
    bool first_round = true;
    NodePtr node;  // non-null while this process occupies a queue slot

    for (;;) {
        // Phase 2: bounded spin.
        std::uint64_t iters = 0;
        bool got = spin_round(ctx, budget, iters);
        rep.total_spin_iterations += iters;
        if (first_round) {
            rep.spin_iterations = iters;
            if (!got) {
                // Yield phase: give up the time slice a configured number of
                // times between spin exhaustion and the first sleep.
                for (std::uint32_t i = 0; i < tuning_.class_policy.yield_count && !got; ++i) {
                    std::this_thread::yield();
                    got = raw_try_acquire(ctx);
                }
            }
            first_round = false;
        }
        if (!got && node) {
            // A woken waiter re-checks the latch at least once even when its
            // mode has no spin budget.
            got = raw_try_acquire(ctx);
        }
        if (got) break;

        // Phase 3: make sure we hold a queue slot, then park.
        if (!node) {
            node = std::make_shared<WaitNode>(ctx.mode, ctx.pid);
            {
                std::lock_guard<std::mutex> lk(queue_mu_);
                if (poisoned_.load(std::memory_order_relaxed)) throw Poisoned();
                queue_.push_back(node);
                waiter_count_.fetch_add(1, std::memory_order_relaxed);
            }
            if (config_.shared && ctx.mode == Mode::Exclusive) {
                // Reserve the latch: new shared getters now fail their
                // immediate attempt and queue behind us.
                word_.fetch_or(word::kBlockingBit, std::memory_order_relaxed);
            }
            // Final attempt after publishing ourselves. A release that ran
            // before the enqueue saw an empty queue and will never post us;
            // without this check we could sleep on a free latch.
            if (raw_try_acquire(ctx)) break;
        }

        ++n_wait;
        sleeps_.fetch_add(1, std::memory_order_relaxed);
        ++rep.sleeps;

        auto timeout = tuning_.wait_policy.sleep_for(n_wait);
        auto t0 = std::chrono::steady_clock::now();
        bool posted_wake;
        if (timeout == std::chrono::microseconds::max()) {
            node->sem.acquire();
            posted_wake = true;
        } else {
            posted_wake = node->sem.try_acquire_for(timeout);
        }
        auto blocked = std::chrono::duration_cast<std::chrono::nanoseconds>(
            std::chrono::steady_clock::now() - t0);
        wait_ns_.fetch_add(static_cast<std::uint64_t>(blocked.count()),
                           std::memory_order_relaxed);
        rep.wait_time += blocked;

        bool still_queued;
        bool was_posted;
        {
            std::lock_guard<std::mutex> lk(queue_mu_);
            if (poisoned_.load(std::memory_order_relaxed)) throw Poisoned();
            still_queued = node->queued;
            was_posted = node->posted;
        }
        if (!still_queued) {
            if (was_posted && !posted_wake) {
                // The post raced with our timeout; drain it.
                node->sem.try_acquire();
            }
            // We are out of the queue (posted, or a dropped post left us out);
            // if the next round fails we re-enter at the tail.
            node.reset();
        }
        // Timed wake with the slot intact: loop back to Phase 2 keeping our
        // queue position.
    }

    if (node) {
        remove_or_consume(node);
        node.reset();
    }
    gets_.fetch_add(1, std::memory_order_relaxed);
    misses_.fetch_add(1, std::memory_order_relaxed);
    if (rep.sleeps == 0) {
        // Resolved before the first sleep: a spin get. Later rounds never
        // count, no matter how much they spin.
        spin_gets_.fetch_add(1, std::memory_order_relaxed);
    }
    held.add(config_.level, config_.child_number, this);
    record_miss(ctx, rep);
    return rep;
}

std::optional<Pid> Latch::free(Pid pid, HeldSet* held) {
    std::uint64_t w = word_.load(std::memory_order_acquire);
    LatchState st = word::decode(w, config_.shared);

    if (st.holder == LatchState::Holder::Exclusive) {
        if (st.pid != pid) {
            throw NotHolder("latch '" + config_.name + "' held exclusively by pid " +
                            std::to_string(st.pid) + ", freed by pid " + std::to_string(pid));
        }
        // The classic release: a plain store (no read-modify-write), then a
        // full barrier before inspecting the waiter list.
        word_.store(word::released(w, Mode::Exclusive, config_.shared),
                    std::memory_order_release);
        std::atomic_thread_fence(std::memory_order_seq_cst);
    } else if (st.holder == LatchState::Holder::Shared) {
        {
            std::lock_guard<std::mutex> lk(queue_mu_);
            auto it = std::find(shared_holders_.begin(), shared_holders_.end(), pid);
            if (it == shared_holders_.end()) {
                throw NotHolder("latch '" + config_.name + "' has no shared hold by pid " +
                                std::to_string(pid));
            }
            shared_holders_.erase(it);
        }
        // Concurrent shared releases each drop exactly one reference; the
        // blocking mark in the high bits is untouched by the subtraction.
        word_.fetch_sub(1, std::memory_order_acq_rel);
    } else {
        throw NotHolder("latch '" + config_.name + "' is not held");
    }

    if (held) held->remove(this);

    std::lock_guard<std::mutex> lk(queue_mu_);
    std::uint64_t now = word_.load(std::memory_order_relaxed);
    if (!word::held(now, config_.shared) && !queue_.empty()) {
        return post_first_admissible_locked(now);
    }
    return std::nullopt;
}

std::optional<Pid> Latch::post_first_admissible_locked(std::uint64_t current_word) {
    for (auto it = queue_.begin(); it != queue_.end(); ++it) {
        if (!word::can_acquire(current_word, (*it)->mode, config_.shared)) continue;
        if (tuning_.post_loss_probability > 0.0 &&
            uniform01(fault_rng_) < tuning_.post_loss_probability) {
            // Fault injection: the wakeup evaporates. The waiter keeps its
            // slot; a timed policy recovers on its own, a post-only waiter
            // sleeps until some later release posts the head again.
            return std::nullopt;
        }
        NodePtr n = *it;
        queue_.erase(it);
        waiter_count_.fetch_sub(1, std::memory_order_relaxed);
        n->queued = false;
        n->posted = true;
        n->sem.release();
        return n->pid;
    }
    return std::nullopt;
}

void Latch::poison() {
    std::lock_guard<std::mutex> lk(queue_mu_);
    poisoned_.store(true, std::memory_order_release);
    for (auto& n : queue_) {
        n->queued = false;
        n->sem.release();
    }
    queue_.clear();
    waiter_count_.store(0, std::memory_order_relaxed);
}

LatchState Latch::state() const {
    return word::decode(word_.load(std::memory_order_acquire), config_.shared);
}

stats::LatchStats Latch::counters() const {
    stats::LatchStats s;
    s.timestamp_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_)
                        .count();
    s.gets = gets_.load(std::memory_order_relaxed);
    s.misses = misses_.load(std::memory_order_relaxed);
    s.sleeps = sleeps_.load(std::memory_order_relaxed);
    s.spin_gets = spin_gets_.load(std::memory_order_relaxed);
    s.wait_time_us = wait_ns_.load(std::memory_order_relaxed) / 1000;
    s.immediate_gets = immediate_gets_.load(std::memory_order_relaxed);
    s.immediate_misses = immediate_misses_.load(std::memory_order_relaxed);
    return s;
}

LiveSample Latch::sample() const {
    LiveSample s;
    s.state = state();
    s.spinners = spinners_.load(std::memory_order_relaxed);
    s.waiters = waiter_count_.load(std::memory_order_relaxed);
    return s;
}

void Latch::record_miss(const AcquireContext& ctx, const AcquisitionReport& rep) {
    std::lock_guard<std::mutex> lk(queue_mu_);
    miss_ring_.push_back(MissRecord{ctx.where_code, ctx.why_code, ctx.pid, rep.sleeps});
    if (miss_ring_.size() > kMissRingCapacity) miss_ring_.pop_front();
}

std::vector<MissRecord> Latch::recent_misses() const {
    std::lock_guard<std::mutex> lk(queue_mu_);
    return std::vector<MissRecord>(miss_ring_.begin(), miss_ring_.end());
}

}  // namespace latchkit
