#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <random>
#include <thread>
#include <vector>

#include "latchkit/errors.hpp"
#include "latchkit/latch.hpp"
#include "latchkit/rng.hpp"
#include "latchkit/sim.hpp"

namespace latchkit::sim {

namespace {

using Clock = std::chrono::steady_clock;

std::uint32_t budget_iterations(const SimConfig& cfg) {
    if (std::isinf(cfg.spin_budget_us)) return std::numeric_limits<std::uint32_t>::max();
    double iters = cfg.spin_budget_us * 1000.0 / cfg.spin_iteration_ns;
    if (iters <= 0.0) return 0;
    if (iters >= static_cast<double>(std::numeric_limits<std::uint32_t>::max())) {
        return std::numeric_limits<std::uint32_t>::max();
    }
    return static_cast<std::uint32_t>(std::llround(iters));
}

void busy_hold(Clock::time_point until) {
    while (Clock::now() < until) {
        // Active hold: the critical section consumes its own time.
    }
}

}  // namespace

SimResult run_live(const SimConfig& cfg) {
    cfg.validate();
    if (cfg.n_processes > word::kMaxPid) {
        throw ConfigInvalid("n_processes exceeds the pid capacity of the state word");
    }

    LatchConfig lc;
    lc.name = "live";
    lc.shared = false;
    lc.level = 0;
    lc.class_id = 0;

    LatchTuning tuning;
    tuning.class_policy.spin = budget_iterations(cfg);
    tuning.wait_policy = cfg.wait_policy;
    tuning.post_loss_probability = cfg.post_loss_probability;
    tuning.fault_seed = cfg.seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull;

    Latch latch(lc, tuning);

    const std::uint64_t horizon_acq = cfg.horizon_acquisitions > 0
                                          ? cfg.horizon_acquisitions
                                          : std::numeric_limits<std::uint64_t>::max();
    const auto horizon = cfg.horizon_seconds > 0.0
                             ? std::chrono::nanoseconds(static_cast<std::int64_t>(
                                   std::llround(cfg.horizon_seconds * 1e9)))
                             : std::chrono::nanoseconds::max();

    std::atomic<bool> stop{false};
    std::atomic<std::uint64_t> completed{0};
    const auto t0 = Clock::now();

    const unsigned n = cfg.n_processes;
    // Each worker carries 1/n of the offered load.
    const double worker_gap_us = static_cast<double>(n) * 1e6 / cfg.arrival_rate_hz;

    std::vector<std::vector<AcquisitionRecord>> worker_records(n);
    std::vector<std::exception_ptr> worker_errors(n);

    auto worker = [&](unsigned index) {
        const Pid pid = static_cast<Pid>(index + 1);
        std::mt19937_64 rng(cfg.seed + (index + 1) * 0x9e3779b97f4a7c15ull);
        HeldSet held;
        AcquireContext ctx;
        ctx.pid = pid;
        ctx.mode = Mode::Exclusive;
        ctx.where_code = index + 1;
        try {
            while (!stop.load(std::memory_order_relaxed)) {
                double gap_us = (cfg.arrival_kind == SimConfig::ArrivalKind::Poisson)
                                    ? exponential_sample(rng, worker_gap_us)
                                    : worker_gap_us;
                if (gap_us > 0.5) {
                    std::this_thread::sleep_for(std::chrono::nanoseconds(
                        static_cast<std::int64_t>(std::llround(gap_us * 1000.0))));
                }
                if (stop.load(std::memory_order_relaxed)) break;
                if (Clock::now() - t0 >= horizon) {
                    stop.store(true, std::memory_order_relaxed);
                    break;
                }

                const auto arrival = Clock::now();
                AcquisitionReport rep = latch.get_wait(ctx, held);
                const auto acquired_at = Clock::now();
                double hold_us = cfg.holding.sample(rng);
                busy_hold(acquired_at + std::chrono::nanoseconds(static_cast<std::int64_t>(
                                            std::llround(hold_us * 1000.0))));
                latch.free(pid, &held);

                if (cfg.record_acquisitions) {
                    AcquisitionRecord rec;
                    rec.arrival_ts_ns =
                        std::chrono::duration_cast<std::chrono::nanoseconds>(arrival - t0).count();
                    rec.missed = rep.missed;
                    rec.spin_ns = static_cast<std::int64_t>(std::llround(
                        static_cast<double>(rep.total_spin_iterations) * cfg.spin_iteration_ns));
                    rec.sleeps = rep.sleeps;
                    rec.wait_ns = rep.wait_time.count();
                    worker_records[index].push_back(rec);
                }

                std::uint64_t done = completed.fetch_add(1, std::memory_order_relaxed) + 1;
                if (done >= horizon_acq) {
                    stop.store(true, std::memory_order_relaxed);
                    break;
                }
            }
        } catch (...) {
            worker_errors[index] = std::current_exception();
            stop.store(true, std::memory_order_relaxed);
        }
    };

    std::uint64_t sample_count = 0;
    std::uint64_t sample_held = 0;
    std::uint64_t sample_sleepers = 0;
    std::uint64_t sample_spinners = 0;
    auto sampler = [&] {
        const auto interval = std::chrono::nanoseconds(
            static_cast<std::int64_t>(std::llround(cfg.sample_interval_us * 1000.0)));
        while (!stop.load(std::memory_order_relaxed)) {
            LiveSample s = latch.sample();
            ++sample_count;
            if (s.state.holder != LatchState::Holder::Free) ++sample_held;
            sample_sleepers += s.waiters;
            sample_spinners += s.spinners;
            std::this_thread::sleep_for(interval);
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(n + 1);
    try {
        for (unsigned i = 0; i < n; ++i) threads.emplace_back(worker, i);
        threads.emplace_back(sampler);
    } catch (const std::system_error& e) {
        stop.store(true, std::memory_order_relaxed);
        for (auto& t : threads) t.join();
        throw SpawnFailure(std::string("cannot start harness thread: ") + e.what());
    }
    for (auto& t : threads) t.join();

    for (auto& err : worker_errors) {
        if (err) std::rethrow_exception(err);
    }

    const auto t1 = Clock::now();
    SimResult res;
    res.duration_s =
        std::chrono::duration_cast<std::chrono::duration<double>>(t1 - t0).count();
    res.acquisitions = completed.load();
    res.overload_warning = cfg.offered_utilization() >= 1.0;
    res.stats = latch.counters();
    res.stats.timestamp_s = res.duration_s;
    if (res.duration_s > 0.0) {
        res.diff = stats::diff(stats::LatchStats{}, res.stats);
    }
    if (sample_count > 0) {
        double sn = static_cast<double>(sample_count);
        res.sampled.u = static_cast<double>(sample_held) / sn;
        res.sampled.l = static_cast<double>(sample_sleepers) / sn;
        res.sampled.n_s = static_cast<double>(sample_spinners) / sn;
    }
    res.time_avg = res.sampled;  // no exact integrals outside logical time

    if (cfg.record_acquisitions) {
        for (auto& chunk : worker_records) {
            res.records.insert(res.records.end(), chunk.begin(), chunk.end());
        }
        std::sort(res.records.begin(), res.records.end(),
                  [](const AcquisitionRecord& a, const AcquisitionRecord& b) {
                      return a.arrival_ts_ns < b.arrival_ts_ns;
                  });
        for (std::size_t i = 0; i < res.records.size(); ++i) res.records[i].seq = i;
    }
    return res;
}

}  // namespace latchkit::sim
