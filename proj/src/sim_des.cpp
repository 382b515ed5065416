#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <random>
#include <vector>

#include "latchkit/errors.hpp"
#include "latchkit/rng.hpp"
#include "latchkit/sim.hpp"

namespace latchkit::sim {

namespace {

constexpr std::int64_t kNsPerUs = 1000;

std::int64_t us_to_ns(double us) {
    double ns = us * 1000.0;
    if (ns <= 0.0) return 0;
    return std::llround(ns);
}

enum class EvType { Arrival, Release, SpinExpire, Timer, Wake };

struct Event {
    std::int64_t t = 0;
    std::uint64_t seq = 0;  // tie-break: schedule order
    EvType type = EvType::Arrival;
    std::uint32_t pid = 0;
    std::uint64_t gen = 0;
};

struct EventAfter {
    bool operator()(const Event& a, const Event& b) const {
        if (a.t != b.t) return a.t > b.t;
        return a.seq > b.seq;
    }
};

enum class PState { Idle, Holding, Spinning, Sleeping, WakePending };

struct Proc {
    PState st = PState::Idle;
    std::uint64_t gen = 0;  // stales out events scheduled before a transition
    bool queued = false;    // present in the sleep queue (kept across timed rechecks)

    // Per-acquisition bookkeeping.
    bool missed = false;
    std::int64_t arrival_ns = 0;
    std::int64_t spin_start = 0;
    std::int64_t sleep_start = 0;
    std::int64_t spin_acc = 0;
    std::int64_t wait_acc = 0;
    std::uint32_t sleeps_acc = 0;
    unsigned n_wait = 0;  // ordinal of the next sleep, for backoff schedules
};

class DesEngine {
  public:
    explicit DesEngine(const SimConfig& cfg)
        : cfg_(cfg),
          rng_(cfg.seed),
          procs_(cfg.n_processes),
          pure_spin_(std::isinf(cfg.spin_budget_us)),
          spin_budget_ns_(pure_spin_ ? 0 : us_to_ns(cfg.spin_budget_us)),
          wake_latency_ns_(us_to_ns(cfg.wake_latency_us)),
          sample_iv_ns_(std::max<std::int64_t>(1, us_to_ns(cfg.sample_interval_us))),
          horizon_ns_(cfg.horizon_seconds > 0.0
                          ? std::llround(cfg.horizon_seconds * 1e9)
                          : std::numeric_limits<std::int64_t>::max()),
          mean_gap_us_(1e6 / cfg.arrival_rate_hz) {
        idle_.reserve(procs_.size());
        for (std::uint32_t pid = cfg.n_processes; pid-- > 0;) idle_.push_back(pid);
        if (cfg.record_acquisitions && cfg.horizon_acquisitions > 0) {
            records_.reserve(cfg.horizon_acquisitions);
        }
    }

    SimResult run() {
        schedule_next_arrival(0);
        while (!pq_.empty()) {
            Event ev = pq_.top();
            pq_.pop();
            advance_time(ev.t);
            now_ = ev.t;
            switch (ev.type) {
                case EvType::Arrival:
                    on_arrival(ev.t);
                    break;
                case EvType::Release:
                    if (ev.gen == procs_[ev.pid].gen) on_release(ev.pid, ev.t);
                    break;
                case EvType::SpinExpire:
                    if (ev.gen == procs_[ev.pid].gen) on_spin_expire(ev.pid, ev.t);
                    break;
                case EvType::Timer:
                    if (ev.gen == procs_[ev.pid].gen) on_timer(ev.pid, ev.t);
                    break;
                case EvType::Wake:
                    if (ev.gen == procs_[ev.pid].gen) on_wake(ev.pid, ev.t);
                    break;
            }
        }

        std::int64_t end_ns = now_;
        if (stopped_by_time_ && horizon_ns_ != std::numeric_limits<std::int64_t>::max()) {
            end_ns = std::max(end_ns, horizon_ns_);
        }
        advance_time(end_ns);

        SimResult res;
        res.duration_s = static_cast<double>(end_ns) * 1e-9;
        res.acquisitions = completed_;
        res.overload_warning = cfg_.offered_utilization() >= 1.0;
        res.stats.timestamp_s = res.duration_s;
        res.stats.gets = gets_;
        res.stats.misses = misses_;
        res.stats.sleeps = sleeps_;
        res.stats.spin_gets = spin_gets_;
        res.stats.wait_time_us = wait_ns_total_ / static_cast<std::uint64_t>(kNsPerUs);
        if (res.duration_s > 0.0) {
            res.diff = stats::diff(stats::LatchStats{}, res.stats);
        }
        if (samples_ > 0) {
            double n = static_cast<double>(samples_);
            res.sampled.u = static_cast<double>(sum_held_) / n;
            res.sampled.l = static_cast<double>(sum_sleepers_) / n;
            res.sampled.n_s = static_cast<double>(sum_spinners_) / n;
        }
        if (end_ns > 0) {
            long double span = static_cast<long double>(end_ns);
            res.time_avg.u = static_cast<double>(int_held_ / span);
            res.time_avg.l = static_cast<double>(int_sleepers_ / span);
            res.time_avg.n_s = static_cast<double>(int_spinners_ / span);
        }
        res.records = std::move(records_);
        return res;
    }

  private:
    void schedule(EvType type, std::int64_t t, std::uint32_t pid, std::uint64_t gen) {
        pq_.push(Event{t, ev_seq_++, type, pid, gen});
    }

    void schedule_next_arrival(std::int64_t from) {
        if (stop_arrivals_) return;
        double gap_us = (cfg_.arrival_kind == SimConfig::ArrivalKind::Poisson)
                            ? exponential_sample(rng_, mean_gap_us_)
                            : mean_gap_us_;
        std::int64_t t = from + us_to_ns(gap_us);
        if (t > horizon_ns_) {
            stop_arrivals_ = true;
            stopped_by_time_ = true;
            return;
        }
        schedule(EvType::Arrival, t, 0, 0);
    }

    void on_arrival(std::int64_t t) {
        if (stop_arrivals_) return;
        schedule_next_arrival(t);
        if (!idle_.empty()) {
            std::uint32_t pid = idle_.back();
            idle_.pop_back();
            start_get(pid, t, t);
        } else {
            deferred_.push_back(t);  // all processes busy; queue for the next free one
        }
    }

    void start_get(std::uint32_t pid, std::int64_t t, std::int64_t arrival_ns) {
        Proc& p = procs_[pid];
        ++p.gen;
        p.missed = false;
        p.arrival_ns = arrival_ns;
        p.spin_acc = 0;
        p.wait_acc = 0;
        p.sleeps_acc = 0;
        p.n_wait = 0;
        if (!holder_) {
            complete(pid, t);
            return;
        }
        p.missed = true;
        begin_spin_or_sleep(pid, t);
    }

    void begin_spin_or_sleep(std::uint32_t pid, std::int64_t t) {
        Proc& p = procs_[pid];
        ++p.gen;
        if (pure_spin_ || spin_budget_ns_ > 0) {
            p.st = PState::Spinning;
            p.spin_start = t;
            spinners_.push_back(pid);
            if (!pure_spin_) schedule(EvType::SpinExpire, t + spin_budget_ns_, pid, p.gen);
        } else {
            enter_sleep(pid, t);
        }
    }

    void enter_sleep(std::uint32_t pid, std::int64_t t) {
        Proc& p = procs_[pid];
        // Final check before blocking: without it a waiter could park while the
        // latch sits free and nobody is left to post it.
        if (!holder_) {
            if (p.queued) dequeue(pid);
            complete(pid, t);
            return;
        }
        ++p.gen;
        p.st = PState::Sleeping;
        if (!p.queued) {
            queue_.push_back(pid);
            p.queued = true;
        }
        p.sleep_start = t;
        ++p.sleeps_acc;
        ++p.n_wait;
        auto d = cfg_.wait_policy.sleep_for(p.n_wait);
        if (d != std::chrono::microseconds::max()) {
            schedule(EvType::Timer, t + d.count() * kNsPerUs, pid, p.gen);
        }
    }

    void complete(std::uint32_t pid, std::int64_t t) {
        if (holder_) throw Error("simulator invariant violated: overlapping exclusive ownership");
        Proc& p = procs_[pid];
        ++gets_;
        if (p.missed) {
            ++misses_;
            if (p.sleeps_acc == 0) ++spin_gets_;
        }
        sleeps_ += p.sleeps_acc;
        wait_ns_total_ += static_cast<std::uint64_t>(p.wait_acc);
        if (cfg_.record_acquisitions) {
            records_.push_back(AcquisitionRecord{next_record_seq_++, p.arrival_ns, p.missed,
                                                 p.spin_acc, p.sleeps_acc, p.wait_acc});
        }
        ++completed_;
        if (cfg_.horizon_acquisitions > 0 && completed_ >= cfg_.horizon_acquisitions) {
            stop_arrivals_ = true;
        }
        ++p.gen;
        p.st = PState::Holding;
        holder_ = pid;
        std::int64_t hold_ns = us_to_ns(cfg_.holding.sample(rng_));
        schedule(EvType::Release, t + hold_ns, pid, p.gen);
    }

    void on_release(std::uint32_t pid, std::int64_t t) {
        Proc& p = procs_[pid];
        if (p.st != PState::Holding || !holder_ || *holder_ != pid) {
            throw Error("simulator invariant violated: release by non-holder");
        }
        holder_.reset();
        p.st = PState::Idle;
        ++p.gen;
        resolve_contention(t);
        recycle(pid, t);
    }

    /// At a release instant, spinners race first (uniform random winner); with
    /// no spinner the first sleeping waiter is posted.
    void resolve_contention(std::int64_t t) {
        if (!spinners_.empty()) {
            std::size_t i = uniform_index(rng_, spinners_.size());
            std::uint32_t winner = spinners_[i];
            spinners_[i] = spinners_.back();
            spinners_.pop_back();
            Proc& p = procs_[winner];
            p.spin_acc += t - p.spin_start;
            if (p.queued) dequeue(winner);
            complete(winner, t);
            return;
        }
        for (std::uint32_t cand : queue_) {
            Proc& p = procs_[cand];
            if (p.st != PState::Sleeping) continue;  // mid-recheck; already racing awake
            if (wake_latency_ns_ == 0) {
                dequeue(cand);
                p.wait_acc += t - p.sleep_start;
                complete(cand, t);  // direct handoff: no steal window
            } else {
                dequeue(cand);
                ++p.gen;
                p.st = PState::WakePending;
                ++wake_pending_;
                schedule(EvType::Wake, t + wake_latency_ns_, cand, p.gen);
            }
            return;
        }
    }

    void recycle(std::uint32_t pid, std::int64_t t) {
        if (!deferred_.empty()) {
            std::int64_t arrival_ns = deferred_.front();
            deferred_.pop_front();
            start_get(pid, t, arrival_ns);
        } else {
            idle_.push_back(pid);
        }
    }

    void on_spin_expire(std::uint32_t pid, std::int64_t t) {
        Proc& p = procs_[pid];
        p.spin_acc += t - p.spin_start;
        remove_spinner(pid);
        enter_sleep(pid, t);
    }

    void on_timer(std::uint32_t pid, std::int64_t t) {
        Proc& p = procs_[pid];
        p.wait_acc += t - p.sleep_start;
        if (!holder_) {
            dequeue(pid);
            complete(pid, t);
            return;
        }
        // Timed wake while the latch is held: back to the spin phase, keeping
        // the queue position for the eventual re-sleep.
        begin_spin_or_sleep(pid, t);
    }

    void on_wake(std::uint32_t pid, std::int64_t t) {
        Proc& p = procs_[pid];
        --wake_pending_;
        p.wait_acc += t - p.sleep_start;
        if (!holder_) {
            complete(pid, t);
            return;
        }
        // Beaten inside the wake window; spins again and, if that fails, goes
        // back to sleep at the tail.
        begin_spin_or_sleep(pid, t);
    }

    void dequeue(std::uint32_t pid) {
        auto it = std::find(queue_.begin(), queue_.end(), pid);
        if (it != queue_.end()) queue_.erase(it);
        procs_[pid].queued = false;
    }

    void remove_spinner(std::uint32_t pid) {
        auto it = std::find(spinners_.begin(), spinners_.end(), pid);
        if (it != spinners_.end()) {
            *it = spinners_.back();
            spinners_.pop_back();
        }
    }

    /// Accumulates sampling-tick sums and exact time integrals for the state
    /// that held over (last_adv_, t]. Called before mutating state at t.
    void advance_time(std::int64_t t) {
        if (t <= last_adv_) return;
        std::uint64_t held = holder_ ? 1 : 0;
        std::uint64_t sleepers = queue_.size() + wake_pending_;
        std::uint64_t nspin = spinners_.size();

        std::uint64_t ticks = static_cast<std::uint64_t>(t / sample_iv_ns_) -
                              static_cast<std::uint64_t>(last_adv_ / sample_iv_ns_);
        if (ticks > 0) {
            samples_ += ticks;
            sum_held_ += ticks * held;
            sum_sleepers_ += ticks * sleepers;
            sum_spinners_ += ticks * nspin;
        }
        long double dt = static_cast<long double>(t - last_adv_);
        int_held_ += dt * static_cast<long double>(held);
        int_sleepers_ += dt * static_cast<long double>(sleepers);
        int_spinners_ += dt * static_cast<long double>(nspin);
        last_adv_ = t;
    }

    const SimConfig& cfg_;
    std::mt19937_64 rng_;
    std::vector<Proc> procs_;

    const bool pure_spin_;
    const std::int64_t spin_budget_ns_;
    const std::int64_t wake_latency_ns_;
    const std::int64_t sample_iv_ns_;
    const std::int64_t horizon_ns_;
    const double mean_gap_us_;

    std::priority_queue<Event, std::vector<Event>, EventAfter> pq_;
    std::uint64_t ev_seq_ = 0;
    std::int64_t now_ = 0;

    std::optional<std::uint32_t> holder_;
    std::vector<std::uint32_t> spinners_;
    std::deque<std::uint32_t> queue_;
    std::vector<std::uint32_t> idle_;
    std::deque<std::int64_t> deferred_;
    std::uint64_t wake_pending_ = 0;

    bool stop_arrivals_ = false;
    bool stopped_by_time_ = false;

    std::uint64_t gets_ = 0;
    std::uint64_t misses_ = 0;
    std::uint64_t sleeps_ = 0;
    std::uint64_t spin_gets_ = 0;
    std::uint64_t wait_ns_total_ = 0;
    std::uint64_t completed_ = 0;
    std::uint64_t next_record_seq_ = 0;
    std::vector<AcquisitionRecord> records_;

    std::int64_t last_adv_ = 0;
    std::uint64_t samples_ = 0;
    std::uint64_t sum_held_ = 0;
    std::uint64_t sum_sleepers_ = 0;
    std::uint64_t sum_spinners_ = 0;
    long double int_held_ = 0;
    long double int_sleepers_ = 0;
    long double int_spinners_ = 0;
};

}  // namespace

SimResult run_des(const SimConfig& cfg) {
    cfg.validate();
    DesEngine engine(cfg);
    return engine.run();
}

}  // namespace latchkit::sim
