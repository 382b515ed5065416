#include "latchkit/stats.hpp"

#include <cmath>
#include <sstream>

namespace latchkit::stats {

namespace {

std::uint64_t delta(std::uint64_t begin, std::uint64_t end, const char* field) {
    if (end < begin) {
        throw CounterRegression(std::string(field) + " decreased between snapshots (" +
                                std::to_string(begin) + " -> " + std::to_string(end) + ")");
    }
    return end - begin;
}

}  // namespace

DiffStats diff(const LatchStats& begin, const LatchStats& end) {
    double dt = end.timestamp_s - begin.timestamp_s;
    if (!(dt > 0.0)) throw ZeroInterval();

    DiffStats d;
    d.dt_s = dt;
    d.deltas.gets = delta(begin.gets, end.gets, "gets");
    d.deltas.misses = delta(begin.misses, end.misses, "misses");
    d.deltas.sleeps = delta(begin.sleeps, end.sleeps, "sleeps");
    d.deltas.spin_gets = delta(begin.spin_gets, end.spin_gets, "spin_gets");
    d.deltas.wait_time_us = delta(begin.wait_time_us, end.wait_time_us, "wait_time_us");
    d.deltas.immediate_gets = delta(begin.immediate_gets, end.immediate_gets, "immediate_gets");
    d.deltas.immediate_misses =
        delta(begin.immediate_misses, end.immediate_misses, "immediate_misses");

    d.lambda = static_cast<double>(d.deltas.gets) / dt;
    d.w = static_cast<double>(d.deltas.wait_time_us) / 1e6 / dt;
    if (d.deltas.gets > 0) {
        d.rho = static_cast<double>(d.deltas.misses) / static_cast<double>(d.deltas.gets);
    }
    if (d.deltas.misses > 0) {
        d.kappa = static_cast<double>(d.deltas.sleeps) / static_cast<double>(d.deltas.misses);
        d.sigma = static_cast<double>(d.deltas.spin_gets) / static_cast<double>(d.deltas.misses);
    }
    return d;
}

double eta(int n_cpu, int n_proc) {
    int m = std::min(n_cpu, n_proc);
    if (m < 2) throw SingleCpuInapplicable();
    return static_cast<double>(m) / static_cast<double>(m - 1);
}

double service_time(const DiffStats& d, int n_cpu, int n_proc) {
    double correction = eta(n_cpu, n_proc);
    if (!(d.lambda > 0.0)) throw UndefinedStatistic("service time needs a positive get rate");
    if (!d.rho) throw UndefinedStatistic("service time needs a defined miss ratio");
    return correction * *d.rho / d.lambda;
}

double wait_queue_length(const DiffStats& d) { return d.w; }

RecurrentSleepRatio recurrent_sleep_ratio(const DiffStats& d) {
    if (!d.kappa || !d.sigma) {
        throw UndefinedStatistic("recurrent-sleep ratio needs misses in the interval");
    }
    if (!(*d.kappa > 0.0)) {
        throw UndefinedStatistic("recurrent-sleep ratio needs a positive sleep ratio");
    }
    RecurrentSleepRatio r;
    r.raw = (*d.sigma + *d.kappa - 1.0) / *d.kappa;
    r.value = r.raw;
    if (r.value < 0.0) {
        r.value = 0.0;
        r.clamped = true;
    } else if (r.value > 1.0) {
        r.value = 1.0;
        r.clamped = true;
    }
    return r;
}

AcquisitionTime acquisition_time(const DiffStats& d, double n_s) {
    if (!(d.lambda > 0.0)) throw UndefinedStatistic("acquisition time needs a positive get rate");
    AcquisitionTime t;
    t.spin_s = n_s / d.lambda;
    t.sleep_s = d.w / d.lambda;
    t.total_s = t.spin_s + t.sleep_s;
    return t;
}

DerivedEstimates derive_estimates(const DiffStats& d,
                                  const std::optional<SampledStats>& sampled, int n_cpu,
                                  int n_proc) {
    DerivedEstimates est;
    est.queue_length = wait_queue_length(d);
    try {
        est.eta = eta(n_cpu, n_proc);
    } catch (const SingleCpuInapplicable&) {
        // leave absent
    }
    if (est.eta && d.rho) {
        est.utilization = *est.eta * *d.rho;
        if (d.lambda > 0.0) est.service_time_s = *est.eta * *d.rho / d.lambda;
    }
    if (d.lambda > 0.0) est.sleep_time_s = d.w / d.lambda;
    if (sampled && d.lambda > 0.0) est.acquisition = acquisition_time(d, sampled->n_s);
    if (d.kappa && *d.kappa > 0.0 && d.sigma) est.recurrent = recurrent_sleep_ratio(d);
    return est;
}

std::vector<Finding> contention_report(const DiffStats& d,
                                       const std::optional<SampledStats>& sampled,
                                       const DerivedEstimates& est,
                                       const ContentionThresholds& thresholds) {
    (void)sampled;
    std::vector<Finding> findings;

    auto fmt = [](double v) {
        std::ostringstream os;
        os.precision(4);
        os << v;
        return os.str();
    };

    if (d.w > thresholds.w_per_sec) {
        findings.push_back(Finding{Finding::Code::WaitTimeHigh, d.w, thresholds.w_per_sec,
                                   "wait time per second " + fmt(d.w) + " exceeds " +
                                       fmt(thresholds.w_per_sec)});
    }
    if (est.utilization && *est.utilization > thresholds.utilization) {
        findings.push_back(Finding{Finding::Code::UtilizationHigh, *est.utilization,
                                   thresholds.utilization,
                                   "utilization " + fmt(*est.utilization) + " exceeds " +
                                       fmt(thresholds.utilization)});
    }
    if (est.acquisition && est.service_time_s && *est.service_time_s > 0.0) {
        double ratio = est.acquisition->total_s / *est.service_time_s;
        double sleep_ratio = est.acquisition->sleep_s / *est.service_time_s;
        double worst = std::max(ratio, sleep_ratio);
        if (worst > thresholds.acquisition_over_service) {
            findings.push_back(
                Finding{Finding::Code::AcquisitionDominates, worst,
                        thresholds.acquisition_over_service,
                        "acquisition time is " + fmt(worst) +
                            "x the holding time (threshold " +
                            fmt(thresholds.acquisition_over_service) + "x)"});
        }
    }
    return findings;
}

}  // namespace latchkit::stats
