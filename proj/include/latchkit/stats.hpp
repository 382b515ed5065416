#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latchkit/errors.hpp"

namespace latchkit::stats {

/// One snapshot of a latch's cumulative counters. Counters only grow; the
/// timestamp is monotonic seconds from an arbitrary origin.
struct LatchStats {
    double timestamp_s = 0.0;
    std::uint64_t gets = 0;        // wait-mode acquisitions completed
    std::uint64_t misses = 0;      // wait-mode gets whose immediate attempt failed
    std::uint64_t sleeps = 0;      // blocking episodes
    std::uint64_t spin_gets = 0;   // misses resolved before the first sleep
    std::uint64_t wait_time_us = 0;  // total blocked time, microseconds
    std::uint64_t immediate_gets = 0;
    std::uint64_t immediate_misses = 0;

    bool operator==(const LatchStats&) const = default;
};

/// Interval (differential) statistics between two snapshots. Ratios whose
/// denominator was zero over the interval are absent, never zero: a latch with
/// no misses has no spin efficiency, rather than a perfect or a zero one.
struct DiffStats {
    double dt_s = 0.0;
    double lambda = 0.0;  // gets per second
    std::optional<double> rho;    // misses / gets
    std::optional<double> kappa;  // sleeps / misses
    std::optional<double> sigma;  // spin_gets / misses
    double w = 0.0;  // wait seconds per second (= mean sleep-queue length)

    // Raw counter deltas, kept for reporting.
    struct Deltas {
        std::uint64_t gets = 0;
        std::uint64_t misses = 0;
        std::uint64_t sleeps = 0;
        std::uint64_t spin_gets = 0;
        std::uint64_t wait_time_us = 0;
        std::uint64_t immediate_gets = 0;
        std::uint64_t immediate_misses = 0;
    } deltas;
};

/// Time-averaged state observations gathered by sampling, not from counters.
struct SampledStats {
    double u = 0.0;    // fraction of samples with the latch held
    double l = 0.0;    // mean number of blocked (sleeping) processes
    double n_s = 0.0;  // mean number of spinning processes
};

/// Interval statistics from two snapshots of the same latch.
/// Throws ZeroInterval when the timestamps do not advance and
/// CounterRegression when any counter shrank.
DiffStats diff(const LatchStats& begin, const LatchStats& end);

/// Finite-processor correction m/(m-1), m = min(n_cpu, n_proc): the factor by
/// which the miss ratio underestimates utilization because the holder itself
/// does not sample its own latch. Throws SingleCpuInapplicable when m < 2.
double eta(int n_cpu, int n_proc);

/// Mean holding (service) time estimate S = eta * rho / lambda, in seconds.
/// Throws UndefinedStatistic when lambda is zero or rho is absent, and
/// propagates SingleCpuInapplicable from eta.
double service_time(const DiffStats& d, int n_cpu, int n_proc);

/// Mean sleep-queue length L. Identical to w: each blocked process contributes
/// its blocked seconds to WAIT_TIME, so wait-seconds per second counts the
/// average number of sleepers.
double wait_queue_length(const DiffStats& d);

/// Share of sleeps that were recurrent (a posted waiter losing the race and
/// sleeping again): (sigma + kappa - 1) / kappa.
struct RecurrentSleepRatio {
    double value = 0.0;  // clamped to [0, 1]
    double raw = 0.0;    // as computed; slightly negative under counter noise
    bool clamped = false;
};

/// Throws UndefinedStatistic when kappa is absent or zero.
RecurrentSleepRatio recurrent_sleep_ratio(const DiffStats& d);

/// Mean latch acquisition time T_a = (N_s + W) / lambda split into its spin
/// and sleep components, all in seconds.
struct AcquisitionTime {
    double total_s = 0.0;
    double spin_s = 0.0;
    double sleep_s = 0.0;
};

/// Throws UndefinedStatistic when lambda is zero. n_s is the sampled mean
/// number of spinning processes.
AcquisitionTime acquisition_time(const DiffStats& d, double n_s);

/// Everything derivable from one interval, with absent pieces left empty
/// instead of throwing (the per-operation functions above throw; this is the
/// reporting aggregate).
struct DerivedEstimates {
    std::optional<double> eta;          // absent on single-CPU inputs
    std::optional<double> utilization;  // eta * rho
    std::optional<double> service_time_s;
    double queue_length = 0.0;
    std::optional<double> sleep_time_s;          // W / lambda; needs no sampling
    std::optional<AcquisitionTime> acquisition;  // needs sampled n_s
    std::optional<RecurrentSleepRatio> recurrent;
};

DerivedEstimates derive_estimates(const DiffStats& d,
                                  const std::optional<SampledStats>& sampled,
                                  int n_cpu, int n_proc);

/// Contention findings against fixed thresholds.
struct ContentionThresholds {
    double w_per_sec = 0.1;          // wait seconds per second
    double utilization = 0.10;       // eta * rho
    double acquisition_over_service = 2.0;
};

struct Finding {
    enum class Code {
        WaitTimeHigh,        // w above threshold
        UtilizationHigh,     // eta * rho above threshold
        AcquisitionDominates,  // T_a (or its sleep part) well above S
    };
    Code code;
    double value = 0.0;      // the triggering value
    double threshold = 0.0;  // the limit it crossed
    std::string message;
};

std::vector<Finding> contention_report(const DiffStats& d,
                                       const std::optional<SampledStats>& sampled,
                                       const DerivedEstimates& est,
                                       const ContentionThresholds& thresholds = {});

}  // namespace latchkit::stats
