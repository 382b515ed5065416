#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "latchkit/dist.hpp"
#include "latchkit/errors.hpp"
#include "latchkit/policy.hpp"
#include "latchkit/stats.hpp"

namespace latchkit::sim {

/// Workload and run parameters for both the logical-time simulator and the
/// live threaded harness. Times are microseconds.
struct SimConfig {
    enum class ArrivalKind { Poisson, Deterministic };
    ArrivalKind arrival_kind = ArrivalKind::Poisson;
    double arrival_rate_hz = 10000.0;  // deterministic arrivals use 1/rate as the interval

    model::HoldingDist holding = model::HoldingDist::exponential(10.0);

    // Spin budget in time; infinity = pure spin (never sleeps), 0 = no spin.
    double spin_budget_us = 10.0;

    std::uint32_t n_processes = 100;
    WaitPolicy wait_policy = WaitPolicy::post_only();

    // Stop criteria; at least one must be set. Arrivals cease once either is
    // reached and in-flight acquisitions drain to completion.
    std::uint64_t horizon_acquisitions = 0;  // 0 = unset
    double horizon_seconds = 0.0;            // 0 = unset

    std::uint64_t seed = 1;

    double sample_interval_us = 100.0;

    // Delay between a post and the waiter's re-attempt. New arrivals can steal
    // the latch inside this window, which is what produces recurrent sleeps;
    // zero collapses to a direct handoff to the queue head.
    double wake_latency_us = 10.0;

    // Iteration <-> time conversion for driving the real latch, whose spin
    // budget is counted in polling iterations.
    double spin_iteration_ns = 5.0;

    // Post-drop fault probability for the live harness (see LatchTuning).
    double post_loss_probability = 0.0;

    bool record_acquisitions = false;

    void validate() const;  // throws ConfigInvalid

    /// lambda * <t>: offered utilization (1/interval plays lambda for
    /// deterministic arrivals).
    double offered_utilization() const;
};

/// One completed wait-mode acquisition.
struct AcquisitionRecord {
    std::uint64_t seq = 0;          // completion order, starting at 0
    std::int64_t arrival_ts_ns = 0;
    bool missed = false;
    std::int64_t spin_ns = 0;       // total time in spin phases
    std::uint32_t sleeps = 0;
    std::int64_t wait_ns = 0;       // total time blocked
};

struct SimResult {
    stats::LatchStats stats;      // end-of-run counters; timestamp_s = run duration
    stats::DiffStats diff;        // whole-run differential statistics
    stats::SampledStats sampled;  // U, L, N_s sampled at the configured cadence
    stats::SampledStats time_avg;  // exact time-weighted averages (logical runs)
    bool overload_warning = false;  // offered utilization >= 1
    double duration_s = 0.0;
    std::uint64_t acquisitions = 0;
    std::vector<AcquisitionRecord> records;  // when record_acquisitions
};

/// Deterministic logical-time simulation: single latch, exclusive gets,
/// spin-until-min(release, budget), FIFO sleeping with wait-posting, and
/// uniform random resolution among concurrent spinners at each release.
/// Identical config (including seed) gives a bit-identical result.
SimResult run_des(const SimConfig& cfg);

/// Threaded harness driving a real latch: each worker loops
/// arrival-pacing -> get_wait -> busy-hold -> free. Results are statistical.
SimResult run_live(const SimConfig& cfg);

/// Key=value configuration reader (one pair per line; '#' comments). Keys
/// mirror SimConfig fields; see the command-line tool's help for the list.
SimConfig parse_sim_config(std::istream& in);
SimConfig parse_sim_config_file(const std::string& path);

/// Per-acquisition CSV (header: seq,arrival_ts_ns,missed,spin_ns,sleeps,wait_ns).
void write_acquisitions_csv(std::ostream& out, const std::vector<AcquisitionRecord>& records);

}  // namespace latchkit::sim
