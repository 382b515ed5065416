#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "latchkit/errors.hpp"
#include "latchkit/model.hpp"
#include "latchkit/sim.hpp"

using namespace latchkit;
using namespace latchkit::sim;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Moderate contention: offered utilization 0.3 with a 10 us exponential hold.
SimConfig util03(std::uint64_t horizon = 100000) {
    SimConfig cfg;
    cfg.arrival_kind = SimConfig::ArrivalKind::Poisson;
    cfg.arrival_rate_hz = 30000.0;
    cfg.holding = model::HoldingDist::exponential(10.0);
    cfg.spin_budget_us = 1.0;
    cfg.n_processes = 64;
    cfg.wait_policy = WaitPolicy::post_only();
    cfg.horizon_acquisitions = horizon;
    cfg.seed = 42;
    cfg.sample_interval_us = 2.0;
    cfg.wake_latency_us = 0.0;
    return cfg;
}

bool same_counters(const stats::LatchStats& a, const stats::LatchStats& b) {
    return a.gets == b.gets && a.misses == b.misses && a.sleeps == b.sleeps &&
           a.spin_gets == b.spin_gets && a.wait_time_us == b.wait_time_us &&
           a.immediate_gets == b.immediate_gets && a.immediate_misses == b.immediate_misses;
}

}  // namespace

TEST_CASE("sim config: validation rejects unusable parameters") {
    SimConfig cfg = util03();
    CHECK_NOTHROW(cfg.validate());

    SUBCASE("rate") {
        cfg.arrival_rate_hz = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
        cfg.arrival_rate_hz = -5.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
        cfg.arrival_rate_hz = kInf;
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
    }
    SUBCASE("spin budget") {
        cfg.spin_budget_us = -1.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
        cfg.spin_budget_us = std::nan("");
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
        cfg.spin_budget_us = kInf;  // pure spin is legal
        CHECK_NOTHROW(cfg.validate());
    }
    SUBCASE("processes") {
        cfg.n_processes = 0;
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
    }
    SUBCASE("horizon") {
        cfg.horizon_acquisitions = 0;
        cfg.horizon_seconds = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
        cfg.horizon_seconds = 0.5;  // seconds alone suffice
        CHECK_NOTHROW(cfg.validate());
        cfg.horizon_seconds = -0.5;
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
    }
    SUBCASE("sampling and timing") {
        cfg.sample_interval_us = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
        cfg.sample_interval_us = 100.0;
        cfg.wake_latency_us = -1.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
        cfg.wake_latency_us = 0.0;
        cfg.spin_iteration_ns = 0.0;
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
    }
    SUBCASE("fault probability") {
        cfg.post_loss_probability = 1.5;
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
        cfg.post_loss_probability = -0.1;
        CHECK_THROWS_AS(cfg.validate(), ConfigInvalid);
    }
}

TEST_CASE("sim config: offered utilization is rate times mean hold") {
    SimConfig cfg = util03();
    CHECK(cfg.offered_utilization() == doctest::Approx(0.3).epsilon(1e-12));
    cfg.arrival_rate_hz = 200000.0;
    CHECK(cfg.offered_utilization() == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("sim config: key=value parser round-trips every field") {
    std::istringstream is(
        "# workload\n"
        "arrival = deterministic\n"
        "rate_hz = 25000   # trailing comment\n"
        "holding = uniform:2:8\n"
        "spin_budget_us = inf\n"
        "n_processes = 7\n"
        "wait_policy = reliable:50\n"
        "horizon_acquisitions = 1234\n"
        "horizon_seconds = 2.5\n"
        "seed = 99\n"
        "sample_interval_us = 10\n"
        "wake_latency_us = 3\n"
        "spin_iteration_ns = 2.5\n"
        "post_loss_probability = 0.25\n"
        "record_acquisitions = true\n");
    const SimConfig cfg = parse_sim_config(is);
    CHECK(cfg.arrival_kind == SimConfig::ArrivalKind::Deterministic);
    CHECK(cfg.arrival_rate_hz == doctest::Approx(25000.0));
    CHECK(cfg.holding.kind() == model::HoldingDist::Kind::Uniform);
    CHECK(cfg.holding.mean() == doctest::Approx(5.0));
    CHECK(std::isinf(cfg.spin_budget_us));
    CHECK(cfg.n_processes == 7);
    CHECK(cfg.wait_policy.kind == WaitPolicy::Kind::ReliableTimed);
    CHECK(cfg.wait_policy.timeout.count() == 50);
    CHECK(cfg.horizon_acquisitions == 1234);
    CHECK(cfg.horizon_seconds == doctest::Approx(2.5));
    CHECK(cfg.seed == 99);
    CHECK(cfg.sample_interval_us == doctest::Approx(10.0));
    CHECK(cfg.wake_latency_us == doctest::Approx(3.0));
    CHECK(cfg.spin_iteration_ns == doctest::Approx(2.5));
    CHECK(cfg.post_loss_probability == doctest::Approx(0.25));
    CHECK(cfg.record_acquisitions);
}

TEST_CASE("sim config: interval_us is an alternative spelling of the rate") {
    std::istringstream is(
        "interval_us = 40\n"
        "horizon_acquisitions = 10\n");
    const SimConfig cfg = parse_sim_config(is);
    CHECK(cfg.arrival_rate_hz == doctest::Approx(25000.0));
}

TEST_CASE("sim config: parser rejects malformed input with line numbers") {
    SUBCASE("unknown key") {
        std::istringstream is("horizon_acquisitions = 10\nbogus_key = 3\n");
        try {
            parse_sim_config(is);
            FAIL("expected ParseError");
        } catch (const ParseError& e) {
            CHECK(e.line == 2);
        }
    }
    SUBCASE("missing equals") {
        std::istringstream is("rate_hz 100\n");
        CHECK_THROWS_AS(parse_sim_config(is), ParseError);
    }
    SUBCASE("bad number") {
        std::istringstream is("rate_hz = fast\n");
        CHECK_THROWS_AS(parse_sim_config(is), ParseError);
    }
    SUBCASE("bad distribution spec") {
        std::istringstream is("holding = pareto:1.5:1\n");
        CHECK_THROWS_AS(parse_sim_config(is), ParseError);
    }
    SUBCASE("bad wait policy") {
        std::istringstream is("wait_policy = spinny\n");
        CHECK_THROWS_AS(parse_sim_config(is), ParseError);
    }
    SUBCASE("bad boolean") {
        std::istringstream is("record_acquisitions = maybe\n");
        CHECK_THROWS_AS(parse_sim_config(is), ParseError);
    }
    SUBCASE("validation still applies to parsed configs") {
        std::istringstream is("rate_hz = 100\n");  // no horizon
        CHECK_THROWS_AS(parse_sim_config(is), ConfigInvalid);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(parse_sim_config_file("/nonexistent/sim.conf"), Error);
    }
}

TEST_CASE("logical sim: bit-identical across repeated runs") {
    SimConfig cfg = util03(20000);
    cfg.record_acquisitions = true;
    const SimResult a = run_des(cfg);
    const SimResult b = run_des(cfg);

    CHECK(same_counters(a.stats, b.stats));
    CHECK(a.duration_s == b.duration_s);
    CHECK(a.acquisitions == b.acquisitions);
    CHECK(a.sampled.u == b.sampled.u);
    CHECK(a.sampled.l == b.sampled.l);
    CHECK(a.sampled.n_s == b.sampled.n_s);
    CHECK(a.time_avg.u == b.time_avg.u);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].arrival_ts_ns == b.records[i].arrival_ts_ns);
        CHECK(a.records[i].wait_ns == b.records[i].wait_ns);
        CHECK(a.records[i].spin_ns == b.records[i].spin_ns);
        CHECK(a.records[i].sleeps == b.records[i].sleeps);
    }

    SimConfig other = cfg;
    other.seed = 43;
    const SimResult c = run_des(other);
    REQUIRE(!c.records.empty());
    // A different seed shifts the very first Poisson gap.
    CHECK(c.records.front().arrival_ts_ns != a.records.front().arrival_ts_ns);
}

TEST_CASE("logical sim: counter conservation under direct handoff") {
    // Post-only waiting with zero wake latency leaves no room for recurrent
    // sleeps: every miss either spun to success or slept exactly once-or-more
    // with the first sleep deciding, so MISSES = SPIN_GETS + SLEEPS holds as
    // an integer identity.
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        CAPTURE(seed);
        SimConfig cfg = util03(20000);
        cfg.seed = seed;
        const SimResult r = run_des(cfg);
        CHECK(r.stats.misses == r.stats.spin_gets + r.stats.sleeps);
        CHECK(r.stats.gets >= cfg.horizon_acquisitions);
        CHECK(r.stats.spin_gets <= r.stats.misses);
        CHECK(r.stats.misses <= r.stats.gets);
        REQUIRE(r.diff.sigma.has_value());
        REQUIRE(r.diff.kappa.has_value());
        CHECK(*r.diff.sigma + *r.diff.kappa == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("logical sim: pure spin never sleeps") {
    SimConfig cfg = util03(20000);
    cfg.spin_budget_us = kInf;
    cfg.record_acquisitions = true;
    const SimResult r = run_des(cfg);
    CHECK(r.stats.sleeps == 0);
    CHECK(r.stats.wait_time_us == 0);
    CHECK(r.stats.misses > 0);
    CHECK(r.stats.spin_gets == r.stats.misses);
    REQUIRE(r.diff.sigma.has_value());
    CHECK(*r.diff.sigma == doctest::Approx(1.0));
    for (const auto& rec : r.records) {
        CHECK(rec.sleeps == 0);
        CHECK(rec.wait_ns == 0);
    }
}

TEST_CASE("logical sim: zero spin budget always sleeps on a miss") {
    SimConfig cfg = util03(20000);
    cfg.spin_budget_us = 0.0;
    cfg.record_acquisitions = true;
    const SimResult r = run_des(cfg);
    CHECK(r.stats.misses > 0);
    CHECK(r.stats.spin_gets == 0);
    CHECK(r.stats.sleeps == r.stats.misses);  // direct handoff: one sleep per miss
    REQUIRE(r.diff.kappa.has_value());
    CHECK(*r.diff.kappa == doctest::Approx(1.0));
    CHECK(r.sampled.n_s == doctest::Approx(0.0));
    for (const auto& rec : r.records) {
        CHECK(rec.spin_ns == 0);
        if (rec.missed) CHECK(rec.sleeps >= 1);
    }
}

TEST_CASE("logical sim: a single process never contends with itself") {
    SimConfig cfg = util03(5000);
    cfg.n_processes = 1;
    const SimResult r = run_des(cfg);
    CHECK(r.stats.gets == r.acquisitions);
    CHECK(r.stats.misses == 0);
    CHECK(r.stats.sleeps == 0);
    CHECK(r.stats.wait_time_us == 0);
    REQUIRE(r.diff.rho.has_value());
    CHECK(*r.diff.rho == 0.0);
}

TEST_CASE("logical sim: utilization, queue and spin gauges match theory") {
    const SimConfig cfg = util03(100000);
    const SimResult r = run_des(cfg);

    // U = lambda <t>: holder-busy fraction equals the offered load.
    CHECK(r.time_avg.u == doctest::Approx(0.3).epsilon(0.02));

    // The sampled gauges agree with the exact time averages.
    CHECK(r.sampled.u == doctest::Approx(r.time_avg.u).epsilon(0.02));
    CHECK(std::abs(r.sampled.l - r.time_avg.l) <= 0.01 + 0.05 * r.time_avg.l);
    CHECK(std::abs(r.sampled.n_s - r.time_avg.n_s) <= 0.01 + 0.05 * r.time_avg.n_s);

    // L (time-average sleepers) is W (wait-seconds per second): one identity,
    // two measurements.
    CHECK(std::abs(r.time_avg.l - r.diff.w) <= 0.005 + 0.05 * r.diff.w);

    // N_s = lambda rho Gamma: mean spinners from the spin-cost model.
    REQUIRE(r.diff.rho.has_value());
    const double gamma = model::spin_cpu_time(cfg.holding, cfg.spin_budget_us);
    const double n_s_pred = r.diff.lambda * *r.diff.rho * gamma * 1e-6;
    CHECK(r.time_avg.n_s == doctest::Approx(n_s_pred).epsilon(0.05));

    // Spin efficiency lands near the renewal-model value.
    const double sigma_model = model::spin_efficiency_exact(cfg.holding, cfg.spin_budget_us);
    REQUIRE(r.diff.sigma.has_value());
    CHECK(std::abs(*r.diff.sigma - sigma_model) < 0.02);
}

TEST_CASE("logical sim: overload is flagged") {
    SimConfig cfg = util03(2000);
    cfg.arrival_rate_hz = 200000.0;  // rate * mean = 2
    const SimResult r = run_des(cfg);
    CHECK(r.overload_warning);
    const SimResult calm = run_des(util03(2000));
    CHECK(!calm.overload_warning);
}

TEST_CASE("logical sim: time horizon stops arrivals and extends the duration") {
    SimConfig cfg = util03();
    cfg.horizon_acquisitions = 0;
    cfg.horizon_seconds = 0.05;
    const SimResult r = run_des(cfg);
    CHECK(r.duration_s >= 0.05);
    CHECK(r.duration_s < 0.06);  // drain is quick at utilization 0.3
    // Roughly rate * horizon acquisitions arrived before the cutoff.
    CHECK(double(r.stats.gets) == doctest::Approx(30000.0 * 0.05).epsilon(0.1));
}

TEST_CASE("logical sim: acquisition records fold exactly into the counters") {
    SimConfig cfg = util03(20000);
    cfg.record_acquisitions = true;
    const SimResult r = run_des(cfg);

    REQUIRE(r.records.size() == r.acquisitions);
    CHECK(r.acquisitions == r.stats.gets);

    std::uint64_t missed = 0, sleeps = 0, wait_ns = 0;
    std::uint64_t spin_eq_zero_misses = 0;
    std::uint64_t seq = 0;
    for (const auto& rec : r.records) {
        CHECK(rec.seq == seq++);
        if (!rec.missed) {
            CHECK(rec.sleeps == 0);
            CHECK(rec.spin_ns == 0);
            CHECK(rec.wait_ns == 0);
        }
        if (rec.sleeps == 0) CHECK(rec.wait_ns == 0);
        if (rec.missed) {
            ++missed;
            if (rec.sleeps == 0) ++spin_eq_zero_misses;
        }
        sleeps += rec.sleeps;
        wait_ns += static_cast<std::uint64_t>(rec.wait_ns);
    }
    CHECK(missed == r.stats.misses);
    CHECK(sleeps == r.stats.sleeps);
    CHECK(spin_eq_zero_misses == r.stats.spin_gets);
    CHECK(wait_ns / 1000 == r.stats.wait_time_us);
}

TEST_CASE("logical sim: deterministic arrivals with short holds never miss") {
    SimConfig cfg;
    cfg.arrival_kind = SimConfig::ArrivalKind::Deterministic;
    cfg.arrival_rate_hz = 1e6 / 15.0;  // one arrival every 15 us
    cfg.holding = model::HoldingDist::deterministic(10.0);
    cfg.n_processes = 4;
    cfg.spin_budget_us = 1.0;
    cfg.horizon_acquisitions = 2000;
    cfg.sample_interval_us = 1.0;
    cfg.wake_latency_us = 0.0;
    const SimResult r = run_des(cfg);
    CHECK(r.stats.gets == 2000);
    CHECK(r.stats.misses == 0);
    // Busy 10 of every 15 microseconds.
    CHECK(r.time_avg.u == doctest::Approx(10.0 / 15.0).epsilon(0.02));
    CHECK(r.diff.lambda == doctest::Approx(1e6 / 15.0).epsilon(0.02));
}

TEST_CASE("acquisition csv: header and one row per record") {
    SimConfig cfg = util03(500);
    cfg.record_acquisitions = true;
    const SimResult r = run_des(cfg);

    std::ostringstream os;
    write_acquisitions_csv(os, r.records);
    std::istringstream is(os.str());
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "seq,arrival_ts_ns,missed,spin_ns,sleeps,wait_ns");
    std::size_t rows = 0;
    while (std::getline(is, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == r.records.size());
}

TEST_CASE("live harness: invariants hold under real threads") {
    SimConfig cfg;
    cfg.arrival_kind = SimConfig::ArrivalKind::Poisson;
    cfg.arrival_rate_hz = 3000.0;
    cfg.holding = model::HoldingDist::exponential(150.0);  // long holds force contention
    cfg.spin_budget_us = 5.0;
    cfg.n_processes = 4;
    cfg.wait_policy = WaitPolicy::post_only();
    cfg.horizon_acquisitions = 300;
    cfg.seed = 7;
    cfg.sample_interval_us = 200.0;
    cfg.record_acquisitions = true;

    const SimResult r = run_live(cfg);
    CHECK(r.stats.gets >= 300);
    CHECK(r.stats.gets == r.acquisitions);
    CHECK(r.duration_s > 0.0);
    CHECK(r.stats.misses <= r.stats.gets);
    CHECK(r.stats.spin_gets <= r.stats.misses);
    // Conservation: sleeps cover every miss that did not spin to success.
    CHECK(r.stats.sleeps >= r.stats.misses - r.stats.spin_gets);
    REQUIRE(r.records.size() == r.acquisitions);
    std::uint64_t missed = 0;
    for (const auto& rec : r.records) {
        if (rec.missed) ++missed;
        if (!rec.missed) CHECK(rec.sleeps == 0);
    }
    CHECK(missed == r.stats.misses);
}

TEST_CASE("live harness: deterministic pacing with one worker stays quiet") {
    SimConfig cfg;
    cfg.arrival_kind = SimConfig::ArrivalKind::Deterministic;
    cfg.arrival_rate_hz = 5000.0;
    cfg.holding = model::HoldingDist::deterministic(5.0);
    cfg.spin_budget_us = 10.0;
    cfg.n_processes = 1;
    cfg.horizon_acquisitions = 200;
    const SimResult r = run_live(cfg);
    CHECK(r.stats.gets >= 200);
    CHECK(r.stats.misses == 0);
    CHECK(r.stats.sleeps == 0);
}
