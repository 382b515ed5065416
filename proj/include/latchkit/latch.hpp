#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <vector>

#include "latchkit/errors.hpp"
#include "latchkit/latch_word.hpp"
#include "latchkit/policy.hpp"
#include "latchkit/stats.hpp"

namespace latchkit {

struct LatchConfig {
    std::string name;
    bool shared = false;  // read-write capable (SHR attribute)
    int level = 0;        // 0..14; gets must climb levels
    int class_id = 0;     // 0..7; selects spin/sleep policy
    std::optional<std::uint32_t> child_number;  // members of a parent family only

    void validate() const;  // throws ConfigInvalid
};

/// Per-get parameters: requesting process, mode, and the two opaque
/// instrumentation codes recorded on success (the "where" location index and
/// "why" context value).
struct AcquireContext {
    Pid pid = 0;
    Mode mode = Mode::Exclusive;
    std::uint32_t where_code = 0;
    std::uint32_t why_code = 0;
};

/// Ordered record of the latches one process currently holds, used to enforce
/// the level/child acquisition-order rule.
class HeldSet {
public:
    struct Entry {
        int level = 0;
        std::optional<std::uint32_t> child_number;
        const void* latch = nullptr;  // identity only, never dereferenced
    };

    void add(int level, std::optional<std::uint32_t> child_number, const void* latch) {
        entries_.push_back(Entry{level, child_number, latch});
    }

    /// Removes the most recent entry for `latch`; false if none.
    bool remove(const void* latch);

    bool holds(const void* latch) const;
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::vector<Entry> entries_;
};

/// Deadlock-prevention rule: a wait-mode get is legal only at a level strictly
/// above everything held, except that two children of one family may be taken
/// at the same level in decreasing child-number order. Re-requesting a latch
/// already held is always a violation. Throws OrderViolation.
void check_order(const HeldSet& held, const LatchConfig& target, const void* target_identity);

/// Run-time tuning knobs for one latch instance.
struct LatchTuning {
    // Spin-count parameter for shared latches: an exclusive-mode get on a
    // shared latch spins 2 x this. (Exclusive-only latches use the class spin.)
    std::uint32_t spin_count = 2000;
    ClassPolicy class_policy = ClassPolicy::default_class0();
    WaitPolicy wait_policy = WaitPolicy::post_only();

    // Fault injection: probability that a wakeup post is dropped, for
    // exercising timed-wait recovery. A dropped post leaves the waiter parked
    // until its own timeout; under a post-only policy it parks forever, which
    // is exactly the hazard reliable (timed) waiting exists to absorb.
    double post_loss_probability = 0.0;
    std::uint64_t fault_seed = 0x9e3779b97f4a7c15ull;
};

/// What one wait-mode acquisition did.
struct AcquisitionReport {
    bool missed = false;  // immediate attempt failed
    std::uint64_t spin_iterations = 0;        // polls in the first spin round (<= budget)
    std::uint64_t total_spin_iterations = 0;  // polls across all rounds, incl. post-wake ones
    std::uint32_t sleeps = 0;                 // blocking episodes
    std::chrono::nanoseconds wait_time{0};    // total blocked time
};

/// One entry of the recent-miss ring (who missed where).
struct MissRecord {
    std::uint32_t where_code = 0;
    std::uint32_t why_code = 0;
    Pid pid = 0;
    std::uint32_t sleeps = 0;  // sleeps taken by that acquisition
};

/// Instantaneous view for state sampling: holder state plus gauge readings.
struct LiveSample {
    LatchState state;
    std::uint32_t spinners = 0;  // processes in their spin phase
    std::uint32_t waiters = 0;   // processes parked on the queue
};

/// The spin-blocking latch. Wait-mode acquisition runs in three phases: one
/// immediate atomic attempt; bounded nonatomic polling of the state word with
/// atomic re-attempts when it looks free; then parking on a FIFO queue until
/// the releaser posts it (or a policy timeout fires). Counters follow the
/// classic instrumentation: GETS/MISSES/SPIN_GETS at completion of a wait-mode
/// get, SLEEPS and WAIT_TIME accrued per blocking episode, IMMEDIATE_* from
/// no-wait gets.
///
/// All operations may be called from any thread. Destruction while processes
/// are still inside operations is undefined; use poison() to evict waiters
/// first.
class Latch {
public:
    explicit Latch(LatchConfig config, LatchTuning tuning = {});
    ~Latch();

    Latch(const Latch&) = delete;
    Latch& operator=(const Latch&) = delete;

    /// One atomic compare-and-swap attempt; no counters touched. Throws
    /// ModeUnsupported for a shared request on an exclusive-only latch.
    bool try_get(const AcquireContext& ctx);

    /// No-wait get: one attempt, counted under IMMEDIATE_GETS/IMMEDIATE_MISSES.
    /// Records into `held` on success when provided (no-wait gets are exempt
    /// from the order rule, so the held set is optional here).
    bool get_nowait(const AcquireContext& ctx, HeldSet* held = nullptr);

    /// Wait-mode get: immediate attempt, bounded spin, then FIFO sleep until
    /// acquired. Enforces the order rule against `held` and records the hold.
    /// Throws OrderViolation or Poisoned.
    AcquisitionReport get_wait(const AcquireContext& ctx, HeldSet& held);

    /// Release. Clears the exclusive word with a plain store plus fence (the
    /// release is not an atomic read-modify-write) or drops one shared
    /// reference; when the latch comes free and waiters are parked, posts the
    /// first waiter the new state can admit and returns its pid. Throws
    /// NotHolder.
    std::optional<Pid> free(Pid pid, HeldSet* held = nullptr);

    /// Tears the latch down: current and future waiters throw Poisoned.
    void poison();

    LatchState state() const;
    stats::LatchStats counters() const;
    LiveSample sample() const;

    const LatchConfig& config() const { return config_; }
    const LatchTuning& tuning() const { return tuning_; }

    /// Spin budget (in polling iterations) for a miss in `mode`.
    std::uint64_t spin_budget(Mode mode) const;

    /// Instrumentation codes of the last successful get.
    std::uint32_t last_where() const { return last_where_.load(std::memory_order_relaxed); }
    std::uint32_t last_why() const { return last_why_.load(std::memory_order_relaxed); }

    /// Recent missed acquisitions, oldest first (bounded ring).
    std::vector<MissRecord> recent_misses() const;
    static constexpr std::size_t kMissRingCapacity = 64;

private:
    struct WaitNode {
        WaitNode(Mode m, Pid p) : mode(m), pid(p) {}
        std::binary_semaphore sem{0};
        const Mode mode;
        const Pid pid;
        // Guarded by queue_mu_.
        bool queued = true;
        bool posted = false;
    };
    using NodePtr = std::shared_ptr<WaitNode>;

    bool raw_try_acquire(const AcquireContext& ctx);
    void bookkeep_acquired(const AcquireContext& ctx);
    void ensure_mode_supported(Mode mode) const;
    void ensure_usable() const;  // throws Poisoned
    bool spin_round(const AcquireContext& ctx, std::uint64_t budget, std::uint64_t& iterations);
    void remove_or_consume(const NodePtr& node);

    /// Pops and wakes the first waiter the current word can admit (the head,
    /// unless a shared latch's blocking mark rules shared waiters out).
    /// Requires queue_mu_; returns the woken pid.
    std::optional<Pid> post_first_admissible_locked(std::uint64_t current_word);
    void record_miss(const AcquireContext& ctx, const AcquisitionReport& rep);

    LatchConfig config_;
    LatchTuning tuning_;

    std::atomic<std::uint64_t> word_{word::kFree};

    // Counters; relaxed increments, read one at a time for snapshots (small
    // skew between fields is acceptable for statistics).
    std::atomic<std::uint64_t> gets_{0};
    std::atomic<std::uint64_t> misses_{0};
    std::atomic<std::uint64_t> sleeps_{0};
    std::atomic<std::uint64_t> spin_gets_{0};
    std::atomic<std::uint64_t> wait_ns_{0};
    std::atomic<std::uint64_t> immediate_gets_{0};
    std::atomic<std::uint64_t> immediate_misses_{0};

    std::atomic<std::uint32_t> last_where_{0};
    std::atomic<std::uint32_t> last_why_{0};

    // Gauges for sampling.
    std::atomic<std::uint32_t> spinners_{0};
    std::atomic<std::uint32_t> waiter_count_{0};

    std::atomic<bool> poisoned_{false};

    // Waiter queue and slow-path bookkeeping.
    mutable std::mutex queue_mu_;
    std::deque<NodePtr> queue_;
    std::vector<Pid> shared_holders_;  // multiset; shared latches only
    std::deque<MissRecord> miss_ring_;
    std::mt19937_64 fault_rng_;

    std::chrono::steady_clock::time_point epoch_;
};

}  // namespace latchkit
