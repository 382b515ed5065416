#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "latchkit/errors.hpp"
#include "latchkit/sim.hpp"

namespace latchkit::sim {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

double parse_double(const std::string& tok, std::size_t line_no, const std::string& key) {
    if (tok == "inf" || tok == "infinity") return std::numeric_limits<double>::infinity();
    try {
        std::size_t consumed = 0;
        double v = std::stod(tok, &consumed);
        if (consumed != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line_no, key + ": expected a number, got '" + tok + "'");
    }
}

std::uint64_t parse_u64(const std::string& tok, std::size_t line_no, const std::string& key) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size() || tok.empty()) {
        throw ParseError(line_no, key + ": expected a non-negative integer, got '" + tok + "'");
    }
    return v;
}

bool parse_bool(const std::string& tok, std::size_t line_no, const std::string& key) {
    if (tok == "1" || tok == "true" || tok == "yes" || tok == "on") return true;
    if (tok == "0" || tok == "false" || tok == "no" || tok == "off") return false;
    throw ParseError(line_no, key + ": expected a boolean, got '" + tok + "'");
}

WaitPolicy parse_wait_policy(const std::string& tok, std::size_t line_no) {
    if (tok == "post" || tok == "post_only") return WaitPolicy::post_only();
    if (tok == "backoff" || tok == "backoff_timed") return WaitPolicy::backoff_timed();
    if (tok == "reliable" || tok == "reliable_timed") return WaitPolicy::reliable_timed();
    const std::string prefix = "reliable:";
    if (tok.rfind(prefix, 0) == 0) {
        double ms = parse_double(tok.substr(prefix.size()), line_no, "wait_policy timeout");
        if (!(ms > 0.0) || !std::isfinite(ms)) {
            throw ParseError(line_no, "wait_policy: timeout must be positive milliseconds");
        }
        return WaitPolicy::reliable_timed(
            std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(ms))));
    }
    throw ParseError(line_no, "wait_policy: expected post | reliable[:MS] | backoff, got '" + tok + "'");
}

}  // namespace

void SimConfig::validate() const {
    if (!(arrival_rate_hz > 0.0) || !std::isfinite(arrival_rate_hz)) {
        throw ConfigInvalid("arrival rate must be positive and finite");
    }
    if (std::isnan(spin_budget_us) || spin_budget_us < 0.0) {
        throw ConfigInvalid("spin budget must be >= 0 (or infinite)");
    }
    if (n_processes < 1) throw ConfigInvalid("n_processes must be >= 1");
    if (horizon_acquisitions == 0 && !(horizon_seconds > 0.0)) {
        throw ConfigInvalid("set horizon_acquisitions and/or horizon_seconds");
    }
    if (horizon_seconds < 0.0 || !std::isfinite(horizon_seconds)) {
        throw ConfigInvalid("horizon_seconds must be finite and >= 0");
    }
    if (!(sample_interval_us > 0.0) || !std::isfinite(sample_interval_us)) {
        throw ConfigInvalid("sample_interval_us must be positive");
    }
    if (!(wake_latency_us >= 0.0) || !std::isfinite(wake_latency_us)) {
        throw ConfigInvalid("wake_latency_us must be finite and >= 0");
    }
    if (!(spin_iteration_ns > 0.0) || !std::isfinite(spin_iteration_ns)) {
        throw ConfigInvalid("spin_iteration_ns must be positive");
    }
    if (!(post_loss_probability >= 0.0 && post_loss_probability <= 1.0)) {
        throw ConfigInvalid("post_loss_probability must be within [0, 1]");
    }
}

double SimConfig::offered_utilization() const {
    return arrival_rate_hz * holding.mean() * 1e-6;
}

SimConfig parse_sim_config(std::istream& in) {
    SimConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::string body = trim(line);
        if (body.empty()) continue;
        auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ParseError(line_no, "expected key=value, got '" + body + "'");
        }
        std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        if (key.empty() || value.empty()) {
            throw ParseError(line_no, "expected key=value, got '" + body + "'");
        }

        if (key == "arrival") {
            if (value == "poisson") {
                cfg.arrival_kind = SimConfig::ArrivalKind::Poisson;
            } else if (value == "deterministic" || value == "det") {
                cfg.arrival_kind = SimConfig::ArrivalKind::Deterministic;
            } else {
                throw ParseError(line_no, "arrival: expected poisson | deterministic");
            }
        } else if (key == "rate_hz") {
            cfg.arrival_rate_hz = parse_double(value, line_no, key);
        } else if (key == "interval_us") {
            double iv = parse_double(value, line_no, key);
            if (!(iv > 0.0)) throw ParseError(line_no, "interval_us must be positive");
            cfg.arrival_rate_hz = 1e6 / iv;
        } else if (key == "holding") {
            try {
                cfg.holding = model::parse_dist_spec(value);
            } catch (const Error& e) {
                throw ParseError(line_no, std::string("holding: ") + e.what());
            }
        } else if (key == "spin_budget_us") {
            cfg.spin_budget_us = parse_double(value, line_no, key);
        } else if (key == "n_processes") {
            cfg.n_processes = static_cast<std::uint32_t>(parse_u64(value, line_no, key));
        } else if (key == "wait_policy") {
            cfg.wait_policy = parse_wait_policy(value, line_no);
        } else if (key == "horizon_acquisitions") {
            cfg.horizon_acquisitions = parse_u64(value, line_no, key);
        } else if (key == "horizon_seconds") {
            cfg.horizon_seconds = parse_double(value, line_no, key);
        } else if (key == "seed") {
            cfg.seed = parse_u64(value, line_no, key);
        } else if (key == "sample_interval_us") {
            cfg.sample_interval_us = parse_double(value, line_no, key);
        } else if (key == "wake_latency_us") {
            cfg.wake_latency_us = parse_double(value, line_no, key);
        } else if (key == "spin_iteration_ns") {
            cfg.spin_iteration_ns = parse_double(value, line_no, key);
        } else if (key == "post_loss_probability") {
            cfg.post_loss_probability = parse_double(value, line_no, key);
        } else if (key == "record_acquisitions") {
            cfg.record_acquisitions = parse_bool(value, line_no, key);
        } else {
            throw ParseError(line_no, "unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

SimConfig parse_sim_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open config file '" + path + "'");
    return parse_sim_config(in);
}

void write_acquisitions_csv(std::ostream& out, const std::vector<AcquisitionRecord>& records) {
    out << "seq,arrival_ts_ns,missed,spin_ns,sleeps,wait_ns\n";
    for (const auto& r : records) {
        out << r.seq << ',' << r.arrival_ts_ns << ',' << (r.missed ? 1 : 0) << ',' << r.spin_ns
            << ',' << r.sleeps << ',' << r.wait_ns << '\n';
    }
}

}  // namespace latchkit::sim
