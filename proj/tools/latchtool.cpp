// latchtool: run latch contention simulations, analyze counter snapshots, and
// predict the effect of spin-budget changes from a holding-time model.
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "latchkit/errors.hpp"
#include "latchkit/model.hpp"
#include "latchkit/sim.hpp"
#include "latchkit/snapshot_csv.hpp"
#include "latchkit/stats.hpp"

namespace lk = latchkit;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;  // usage / config / malformed input
constexpr int kExitData = 3;   // well-formed but semantically bad data

std::string sig4(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

std::string us(double seconds) { return sig4(seconds * 1e6) + " us"; }

std::string opt4(const std::optional<double>& v) { return v ? sig4(*v) : "-"; }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json counters_json(const lk::stats::LatchStats& s) {
    return json{{"timestamp_s", s.timestamp_s},
                {"gets", s.gets},
                {"misses", s.misses},
                {"sleeps", s.sleeps},
                {"spin_gets", s.spin_gets},
                {"wait_time_us", s.wait_time_us},
                {"immediate_gets", s.immediate_gets},
                {"immediate_misses", s.immediate_misses}};
}

json diff_json(const lk::stats::DiffStats& d) {
    return json{{"dt_s", d.dt_s},    {"lambda", d.lambda}, {"rho", opt_json(d.rho)},
                {"kappa", opt_json(d.kappa)}, {"sigma", opt_json(d.sigma)}, {"w", d.w}};
}

json estimates_json(const lk::stats::DerivedEstimates& est) {
    json j{{"eta", opt_json(est.eta)},
           {"utilization", opt_json(est.utilization)},
           {"service_time_s", opt_json(est.service_time_s)},
           {"queue_length", est.queue_length}};
    j["sleep_time_s"] = opt_json(est.sleep_time_s);
    if (est.acquisition) {
        j["acquisition_time_s"] = est.acquisition->total_s;
        j["acquisition_spin_s"] = est.acquisition->spin_s;
        j["acquisition_sleep_s"] = est.acquisition->sleep_s;
    } else {
        j["acquisition_time_s"] = nullptr;
    }
    if (est.recurrent) {
        j["recurrent_sleep_ratio"] = est.recurrent->value;
        j["recurrent_sleep_ratio_raw"] = est.recurrent->raw;
    } else {
        j["recurrent_sleep_ratio"] = nullptr;
    }
    return j;
}

json prediction_json(const lk::model::ModelPrediction& p) {
    return json{{"delta", p.delta},
                {"sigma", p.sigma},
                {"kappa", p.kappa},
                {"gamma_sg", p.gamma_sg},
                {"bound", p.bound}};
}

void print_estimates_text(std::ostream& out, const lk::stats::DerivedEstimates& est) {
    out << "  eta              = " << opt4(est.eta) << "\n";
    out << "  utilization      = " << opt4(est.utilization)
        << (est.utilization ? "  (eta * rho)" : "") << "\n";
    if (est.service_time_s) {
        out << "  service time S   = " << us(*est.service_time_s) << "\n";
    } else {
        out << "  service time S   = -\n";
    }
    out << "  queue length L   = " << sig4(est.queue_length) << "\n";
    if (est.acquisition) {
        out << "  acquisition T_a  = " << us(est.acquisition->total_s) << "  (spin "
            << us(est.acquisition->spin_s) << ", sleep " << us(est.acquisition->sleep_s)
            << ")\n";
    } else if (est.sleep_time_s) {
        out << "  sleep time T_sl  = " << us(*est.sleep_time_s)
            << "  (T_a needs spinner samples)\n";
    }
    if (est.recurrent) {
        out << "  recurrent sleeps = " << sig4(est.recurrent->value) << "  (raw "
            << sig4(est.recurrent->raw) << ")\n";
    }
}

// ---------------------------------------------------------------------------
// simulate / bench

struct SimulateArgs {
    std::string config_path;
    bool live = false;
    bool json_out = false;
    std::optional<std::uint64_t> seed;
    std::string snapshots_out;
    std::string acquisitions_out;
};

std::string arrival_text(const lk::sim::SimConfig& cfg) {
    std::ostringstream os;
    if (cfg.arrival_kind == lk::sim::SimConfig::ArrivalKind::Poisson) {
        os << "poisson " << sig4(cfg.arrival_rate_hz) << " Hz";
    } else {
        os << "deterministic every " << sig4(1e6 / cfg.arrival_rate_hz) << " us";
    }
    return os.str();
}

int cmd_simulate(const SimulateArgs& args) {
    lk::sim::SimConfig cfg = lk::sim::parse_sim_config_file(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (!args.acquisitions_out.empty()) cfg.record_acquisitions = true;

    lk::sim::SimResult res = args.live ? lk::sim::run_live(cfg) : lk::sim::run_des(cfg);

    // The harness gives every simulated process its own CPU.
    const int n_proc = static_cast<int>(cfg.n_processes);
    lk::stats::SampledStats sampled = res.sampled;
    lk::stats::DerivedEstimates est =
        lk::stats::derive_estimates(res.diff, sampled, n_proc, n_proc);

    std::optional<lk::model::ModelPrediction> pred;
    if (std::isfinite(cfg.spin_budget_us)) {
        pred = lk::model::predict(cfg.holding, cfg.spin_budget_us);
    }

    if (!args.snapshots_out.empty()) {
        std::ofstream out(args.snapshots_out);
        if (!out) throw lk::ConfigInvalid("cannot write '" + args.snapshots_out + "'");
        lk::stats::Snapshot begin{"sim", {}};
        lk::stats::Snapshot end{"sim", res.stats};
        lk::stats::write_snapshots(out, {begin, end});
    }
    if (!args.acquisitions_out.empty()) {
        std::ofstream out(args.acquisitions_out);
        if (!out) throw lk::ConfigInvalid("cannot write '" + args.acquisitions_out + "'");
        lk::sim::write_acquisitions_csv(out, res.records);
    }

    if (args.json_out) {
        json j;
        j["mode"] = args.live ? "live" : "des";
        j["config"] = {{"arrival", cfg.arrival_kind == lk::sim::SimConfig::ArrivalKind::Poisson
                                       ? "poisson"
                                       : "deterministic"},
                       {"rate_hz", cfg.arrival_rate_hz},
                       {"holding", cfg.holding.spec_string()},
                       {"holding_mean_us", cfg.holding.mean()},
                       {"spin_budget_us", std::isfinite(cfg.spin_budget_us)
                                              ? json(cfg.spin_budget_us)
                                              : json("inf")},
                       {"n_processes", cfg.n_processes},
                       {"wake_latency_us", cfg.wake_latency_us},
                       {"sample_interval_us", cfg.sample_interval_us},
                       {"seed", cfg.seed}};
        j["duration_s"] = res.duration_s;
        j["acquisitions"] = res.acquisitions;
        j["warnings"] = json::array();
        if (res.overload_warning) j["warnings"].push_back("OverloadDetected");
        j["counters"] = counters_json(res.stats);
        j["diff"] = diff_json(res.diff);
        j["sampled"] = {{"u", sampled.u}, {"l", sampled.l}, {"n_s", sampled.n_s}};
        j["estimates"] = estimates_json(est);
        j["model"] = pred ? prediction_json(*pred) : json(nullptr);
        std::cout << j.dump(2) << "\n";
        return kExitOk;
    }

    std::cout << "mode: " << (args.live ? "live threads" : "logical-time simulation") << "\n";
    std::cout << "workload: " << arrival_text(cfg) << ", holding " << cfg.holding.spec_string()
              << " (<t> = " << sig4(cfg.holding.mean()) << " us), spin budget "
              << (std::isfinite(cfg.spin_budget_us) ? sig4(cfg.spin_budget_us) + " us"
                                                    : std::string("unbounded"))
              << ", " << cfg.n_processes << " processes, wake latency "
              << sig4(cfg.wake_latency_us) << " us, seed " << cfg.seed << "\n";
    if (res.overload_warning) {
        std::cout << "warning: OverloadDetected — offered utilization "
                  << sig4(cfg.offered_utilization()) << " >= 1; queues grow without bound\n";
    }
    std::cout << "duration: " << sig4(res.duration_s) << " s, acquisitions: " << res.acquisitions
              << "\n\n";
    const auto& s = res.stats;
    std::cout << "counters: gets=" << s.gets << " misses=" << s.misses << " sleeps=" << s.sleeps
              << " spin_gets=" << s.spin_gets << " wait_time_us=" << s.wait_time_us
              << " immediate_gets=" << s.immediate_gets
              << " immediate_misses=" << s.immediate_misses << "\n\n";
    std::cout << "interval statistics (whole run):\n";
    std::cout << "  lambda = " << sig4(res.diff.lambda) << " Hz\n";
    std::cout << "  rho    = " << opt4(res.diff.rho) << "\n";
    std::cout << "  kappa  = " << opt4(res.diff.kappa) << "\n";
    std::cout << "  sigma  = " << opt4(res.diff.sigma) << "\n";
    std::cout << "  W      = " << sig4(res.diff.w) << "\n\n";
    std::cout << "sampled state: U = " << sig4(sampled.u) << ", L = " << sig4(sampled.l)
              << ", N_s = " << sig4(sampled.n_s) << "\n\n";
    std::cout << "estimates (n_cpu = n_proc = " << n_proc << "):\n";
    print_estimates_text(std::cout, est);
    if (pred) {
        std::cout << "\nmodel comparison (holding " << cfg.holding.spec_string() << ", delta "
                  << sig4(cfg.spin_budget_us) << " us):\n";
        std::cout << "  sigma: measured " << opt4(res.diff.sigma) << " / model "
                  << sig4(pred->sigma) << "\n";
        std::cout << "  kappa: measured " << opt4(res.diff.kappa) << " / model "
                  << sig4(pred->kappa) << "\n";
        std::cout << "  gamma_sg (model) = " << sig4(pred->gamma_sg) << " us, bound "
                  << sig4(pred->bound) << " us\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalyzeArgs {
    std::string snapshots_path;
    int n_cpu = 1;
    int n_proc = 1;
    bool json_out = false;
    std::string dist_spec;  // optional: enables the holding-tail check
    double delta_us = 0.0;
};

struct IntervalReport {
    double t0 = 0.0;
    double t1 = 0.0;
    lk::stats::DiffStats diff;
    lk::stats::DerivedEstimates est;
    std::vector<lk::stats::Finding> findings;
};

const char* finding_code_name(lk::stats::Finding::Code c) {
    switch (c) {
        case lk::stats::Finding::Code::WaitTimeHigh: return "WaitTimeHigh";
        case lk::stats::Finding::Code::UtilizationHigh: return "UtilizationHigh";
        case lk::stats::Finding::Code::AcquisitionDominates: return "AcquisitionDominates";
    }
    return "?";
}

std::string spin_recommendation(const IntervalReport& last,
                                const std::optional<lk::model::HoldingDist>& dist,
                                double delta_us) {
    if (last.diff.deltas.misses == 0 || !last.diff.kappa) {
        return "no contention observed; no tuning needed";
    }
    const double kappa = *last.diff.kappa;
    std::optional<double> service_us;
    if (last.est.service_time_s) service_us = *last.est.service_time_s * 1e6;

    std::string tail_note;
    bool tail_failed = false;
    if (dist && delta_us > 0.0) {
        try {
            auto law = lk::model::high_efficiency_tail(*dist, delta_us);
            tail_note = " (holding tail is exponential, tau = " + sig4(law.tau) + " us)";
        } catch (const lk::NoExponentialTail&) {
            tail_failed = true;
        }
    }

    if (tail_failed || (service_us && *service_us > 100.0)) {
        return "spin tuning useless here: " +
               std::string(tail_failed ? "holding times have no exponential tail"
                                       : "holding time S = " + us(*last.est.service_time_s) +
                                             " is far above the microseconds range") +
               "; suspect preemption or CPU starvation inflating hold times";
    }
    if (kappa <= 0.2) {
        return "increase spin budget: expected kappa -> kappa^2 per doubling (kappa " +
               sig4(kappa) + " -> " + sig4(kappa * kappa) + ")" + tail_note;
    }
    return "sleep ratio is high (kappa = " + sig4(kappa) +
           "): the spin budget is small against holding times; raising it trades CPU for "
           "latency (kappa -> kappa^2 per doubling applies once kappa <= 0.2)" +
           tail_note;
}

int cmd_analyze(const AnalyzeArgs& args) {
    std::vector<lk::stats::Snapshot> rows;
    try {
        rows = lk::stats::read_snapshots_file(args.snapshots_path);
    } catch (const lk::CounterRegression& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    }

    std::optional<lk::model::HoldingDist> dist;
    if (!args.dist_spec.empty()) dist = lk::model::parse_dist_spec(args.dist_spec);

    // Group rows (already timestamp-sorted) per latch.
    std::map<std::string, std::vector<const lk::stats::Snapshot*>> per_latch;
    for (const auto& r : rows) per_latch[r.latch_id].push_back(&r);

    bool any_interval = false;
    json jout{{"latches", json::array()}};

    for (const auto& [latch_id, snaps] : per_latch) {
        std::vector<IntervalReport> intervals;
        std::vector<std::string> warnings;
        if (snaps.size() < 2) {
            warnings.push_back("only one snapshot; need at least two to differentiate");
        }
        for (std::size_t i = 1; i < snaps.size(); ++i) {
            IntervalReport rep;
            rep.t0 = snaps[i - 1]->stats.timestamp_s;
            rep.t1 = snaps[i]->stats.timestamp_s;
            rep.diff = lk::stats::diff(snaps[i - 1]->stats, snaps[i]->stats);
            rep.est = lk::stats::derive_estimates(rep.diff, std::nullopt, args.n_cpu,
                                                  args.n_proc);
            rep.findings = lk::stats::contention_report(rep.diff, std::nullopt, rep.est);
            intervals.push_back(std::move(rep));
            any_interval = true;
        }
        for (std::size_t i = 1; i < intervals.size(); ++i) {
            double prev = intervals[i - 1].diff.lambda;
            double curr = intervals[i].diff.lambda;
            if (prev > 0.0 && std::abs(curr - prev) / prev > 0.5) {
                std::ostringstream os;
                os << "interval " << i << ": lambda moved from " << sig4(prev) << " to "
                   << sig4(curr)
                   << " Hz (>50%); workload is non-stationary, treat ratios with care";
                warnings.push_back(os.str());
            }
        }
        std::string recommendation =
            intervals.empty() ? std::string("insufficient data")
                              : spin_recommendation(intervals.back(), dist, args.delta_us);

        if (args.json_out) {
            json jl{{"latch_id", latch_id},
                    {"intervals", json::array()},
                    {"warnings", warnings},
                    {"recommendation", recommendation}};
            for (const auto& rep : intervals) {
                json ji{{"t0_s", rep.t0},
                        {"t1_s", rep.t1},
                        {"diff", diff_json(rep.diff)},
                        {"estimates", estimates_json(rep.est)},
                        {"findings", json::array()}};
                for (const auto& f : rep.findings) {
                    ji["findings"].push_back(json{{"code", finding_code_name(f.code)},
                                                  {"value", f.value},
                                                  {"threshold", f.threshold},
                                                  {"message", f.message}});
                }
                jl["intervals"].push_back(std::move(ji));
            }
            jout["latches"].push_back(std::move(jl));
            continue;
        }

        std::cout << "latch '" << latch_id << "' (" << snaps.size() << " snapshots):\n";
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            const auto& rep = intervals[i];
            std::cout << " interval " << i << " [" << sig4(rep.t0) << " s -> " << sig4(rep.t1)
                      << " s]:\n";
            std::cout << "  lambda = " << sig4(rep.diff.lambda) << " Hz, rho = "
                      << opt4(rep.diff.rho) << ", kappa = " << opt4(rep.diff.kappa)
                      << ", sigma = " << opt4(rep.diff.sigma) << ", W = " << sig4(rep.diff.w)
                      << "\n";
            print_estimates_text(std::cout, rep.est);
            if (rep.findings.empty()) {
                std::cout << "  findings: none (no significant contention)\n";
            } else {
                for (const auto& f : rep.findings) {
                    std::cout << "  finding [" << finding_code_name(f.code) << "]: " << f.message
                              << "\n";
                }
            }
        }
        for (const auto& w : warnings) std::cout << " warning: " << w << "\n";
        std::cout << " recommendation: " << recommendation << "\n\n";
    }

    if (args.json_out) std::cout << jout.dump(2) << "\n";

    if (!any_interval) {
        std::cerr << "data error: no latch has two or more snapshots\n";
        return kExitData;
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// predict

struct PredictArgs {
    std::string dist_spec;
    double delta_us = 0.0;
    std::vector<double> candidates;
    bool json_out = false;
};

std::string regime_label(const lk::model::ModelPrediction& p) {
    if (p.sigma <= 0.1) return "low-efficiency (sigma << 1: sigma, gamma scale ~linearly)";
    if (p.kappa <= 0.1) return "high-efficiency (kappa << 1: kappa squares per doubling)";
    return "intermediate";
}

int cmd_predict(const PredictArgs& args) {
    if (!(args.delta_us > 0.0)) throw lk::ConfigInvalid("--delta must be positive");
    if (args.candidates.empty()) throw lk::ConfigInvalid("--candidates must be non-empty");
    for (double c : args.candidates) {
        if (!(c > 0.0)) throw lk::ConfigInvalid("candidate spin budgets must be positive");
    }
    lk::model::HoldingDist dist = lk::model::parse_dist_spec(args.dist_spec);
    lk::model::ModelPrediction base = lk::model::predict(dist, args.delta_us);

    std::string tail_note;
    json tail_json = nullptr;
    try {
        auto law = lk::model::high_efficiency_tail(dist, args.delta_us);
        tail_note = "exponential tail fit: tau = " + sig4(law.tau) +
                    " us (r^2 = " + sig4(law.r_squared) +
                    "); squaring law applies: kappa -> kappa^2 per doubling";
        tail_json = json{{"c", law.c},
                         {"tau", law.tau},
                         {"kappa_pred", law.kappa_pred},
                         {"gamma_pred", law.gamma_pred},
                         {"r_squared", law.r_squared}};
    } catch (const lk::NoExponentialTail& e) {
        tail_note = std::string("no exponential tail; squaring law inapplicable (") + e.what() +
                    ")";
    }

    std::vector<lk::model::ModelPrediction> preds;
    preds.reserve(args.candidates.size());
    for (double c : args.candidates) preds.push_back(lk::model::predict(dist, c));

    if (args.json_out) {
        json j;
        j["dist"] = dist.spec_string();
        j["mean_us"] = dist.mean();
        j["mean_residual_us"] = dist.second_moment() / (2.0 * dist.mean());
        j["baseline"] = prediction_json(base);
        j["baseline"]["regime"] = regime_label(base);
        j["tail"] = tail_json;
        j["tail_note"] = tail_note;
        j["candidates"] = json::array();
        for (const auto& p : preds) {
            json jc = prediction_json(p);
            jc["sigma_ratio"] = base.sigma > 0 ? p.sigma / base.sigma : 0.0;
            jc["kappa_ratio"] = base.kappa > 0 ? p.kappa / base.kappa : 0.0;
            jc["gamma_ratio"] = base.gamma_sg > 0 ? p.gamma_sg / base.gamma_sg : 0.0;
            jc["regime"] = regime_label(p);
            j["candidates"].push_back(std::move(jc));
        }
        std::cout << j.dump(2) << "\n";
        return kExitOk;
    }

    std::cout << "distribution: " << dist.spec_string() << "  <t> = " << sig4(dist.mean())
              << " us, mean residual = " << sig4(dist.second_moment() / (2.0 * dist.mean()))
              << " us\n";
    std::cout << "baseline delta = " << sig4(base.delta) << " us: sigma = " << sig4(base.sigma)
              << ", kappa = " << sig4(base.kappa) << ", gamma_sg = " << sig4(base.gamma_sg)
              << " us (bound " << sig4(base.bound) << " us)\n";
    std::cout << "  regime: " << regime_label(base) << "\n";
    std::cout << "  " << tail_note << "\n";
    std::cout << "candidates (ratios vs baseline):\n";
    std::cout << "  delta_us   sigma      kappa      gamma_us   sigma/b    kappa/b    gamma/b   "
                 " regime\n";
    for (const auto& p : preds) {
        std::ostringstream row;
        auto col = [&row](const std::string& v) {
            row << v;
            for (std::size_t i = v.size(); i < 11; ++i) row << ' ';
        };
        col(sig4(p.delta));
        col(sig4(p.sigma));
        col(sig4(p.kappa));
        col(sig4(p.gamma_sg));
        col(base.sigma > 0 ? sig4(p.sigma / base.sigma) : "-");
        col(base.kappa > 0 ? sig4(p.kappa / base.kappa) : "-");
        col(base.gamma_sg > 0 ? sig4(p.gamma_sg / base.gamma_sg) : "-");
        std::cout << "  " << row.str() << regime_label(p) << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"spin-blocking latch simulator, snapshot analyzer, and spin-budget model"};
    app.require_subcommand(1);

    SimulateArgs sim_args;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "run a latch contention simulation");
    sim_cmd->add_option("--config", sim_args.config_path, "key=value simulation config file")
        ->required()
        ->check(CLI::ExistingFile);
    sim_cmd->add_flag("--live", sim_args.live, "drive a real latch with threads");
    sim_cmd->add_flag("--json", sim_args.json_out, "machine-readable output");
    sim_cmd->add_option("--seed", sim_args.seed, "override the config seed");
    sim_cmd->add_option("--snapshots-out", sim_args.snapshots_out,
                        "write begin/end counter snapshots CSV");
    sim_cmd->add_option("--acquisitions-out", sim_args.acquisitions_out,
                        "write per-acquisition CSV (enables recording)");

    SimulateArgs bench_args;
    bench_args.live = true;
    CLI::App* bench_cmd =
        app.add_subcommand("bench", "benchmark a real latch with worker threads");
    bench_cmd->add_option("--config", bench_args.config_path, "key=value simulation config file")
        ->required()
        ->check(CLI::ExistingFile);
    bench_cmd->add_flag("--json", bench_args.json_out, "machine-readable output");
    bench_cmd->add_option("--seed", bench_args.seed, "override the config seed");
    bench_cmd->add_option("--snapshots-out", bench_args.snapshots_out,
                          "write begin/end counter snapshots CSV");
    bench_cmd->add_option("--acquisitions-out", bench_args.acquisitions_out,
                          "write per-acquisition CSV (enables recording)");

    AnalyzeArgs an_args;
    CLI::App* an_cmd = app.add_subcommand("analyze", "differentiate counter snapshots");
    an_cmd->add_option("snapshots", an_args.snapshots_path, "snapshot CSV file")
        ->required()
        ->check(CLI::ExistingFile);
    an_cmd->add_option("--ncpu", an_args.n_cpu, "CPUs on the measured host")->required();
    an_cmd->add_option("--nproc", an_args.n_proc, "processes contending for the latch")
        ->required();
    an_cmd->add_flag("--json", an_args.json_out, "machine-readable output");
    an_cmd->add_option("--dist", an_args.dist_spec,
                       "holding-time distribution, enables the tail check "
                       "(exp:M | det:V | uniform:A:B | pareto:ALPHA:XMIN | hist:FILE)");
    an_cmd->add_option("--delta", an_args.delta_us, "spin budget in us for the tail check");

    PredictArgs pr_args;
    CLI::App* pr_cmd =
        app.add_subcommand("predict", "model sigma/kappa/gamma for candidate spin budgets");
    pr_cmd->add_option("--dist", pr_args.dist_spec,
                       "holding-time distribution "
                       "(exp:M | det:V | uniform:A:B | pareto:ALPHA:XMIN | hist:FILE)")
        ->required();
    pr_cmd->add_option("--delta", pr_args.delta_us, "baseline spin budget, us")->required();
    pr_cmd->add_option("--candidates", pr_args.candidates, "candidate spin budgets, us")
        ->required()
        ->delimiter(',');
    pr_cmd->add_flag("--json", pr_args.json_out, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sim_cmd->parsed()) return cmd_simulate(sim_args);
        if (bench_cmd->parsed()) return cmd_simulate(bench_args);
        if (an_cmd->parsed()) return cmd_analyze(an_args);
        if (pr_cmd->parsed()) return cmd_predict(pr_args);
    } catch (const lk::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const lk::ConfigInvalid& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const lk::MalformedPolicy& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const lk::InfiniteMoment& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const lk::CounterRegression& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const lk::ZeroInterval& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const lk::Error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
    return kExitUsage;
}
