#include "latchkit/policy.hpp"

#include <charconv>
#include <sstream>
#include <vector>

#include "latchkit/errors.hpp"

namespace latchkit {

std::string ClassPolicy::to_string() const {
    std::ostringstream os;
    os << spin << ' ' << yield_count << ' ' << waittime;
    for (auto s : sleeps) os << ' ' << s;
    return os.str();
}

ClassPolicy parse_class_policy(const std::string& text) {
    std::istringstream is(text);
    std::vector<std::string> tokens;
    for (std::string tok; is >> tok;) tokens.push_back(tok);
    if (tokens.size() != 11) {
        throw MalformedPolicy("expected 11 tokens (Spin Yield Waittime Sleep0..Sleep7), got " +
                              std::to_string(tokens.size()));
    }

    auto parse_u32 = [&](const std::string& tok, const char* field) -> std::uint32_t {
        std::uint32_t value = 0;
        const char* begin = tok.data();
        const char* end = begin + tok.size();
        auto [ptr, ec] = std::from_chars(begin, end, value);
        if (ec != std::errc{} || ptr != end) {
            throw MalformedPolicy(std::string(field) + " token '" + tok +
                                  "' is not a non-negative integer");
        }
        return value;
    };

    ClassPolicy policy;
    policy.spin = parse_u32(tokens[0], "Spin");
    policy.yield_count = parse_u32(tokens[1], "Yield");
    policy.waittime = parse_u32(tokens[2], "Waittime");
    for (int i = 0; i < 8; ++i) {
        policy.sleeps[static_cast<std::size_t>(i)] =
            parse_u32(tokens[static_cast<std::size_t>(3 + i)], "Sleep");
    }
    return policy;
}

namespace {

// Sleep schedule as printed by traced waits. The analytic fit below matches it
// only through the eighth wait, so the observed values are authoritative.
constexpr std::array<unsigned, 15> kBackoffMs = {10,  10,  10,  30,  30,  70,  70, 150,
                                                 230, 390, 390, 710, 710, 1350, 1350};
constexpr unsigned kBackoffCapMs = 2000;

}  // namespace

std::chrono::milliseconds backoff_timeout(unsigned n_wait) {
    if (n_wait == 0) n_wait = 1;
    if (n_wait <= kBackoffMs.size()) {
        return std::chrono::milliseconds{kBackoffMs[n_wait - 1]};
    }
    return std::chrono::milliseconds{kBackoffCapMs};
}

std::chrono::milliseconds backoff_timeout_fitted(unsigned n_wait) {
    if (n_wait == 0) n_wait = 1;
    const unsigned exponent = (n_wait + 1) / 2;
    if (exponent >= 8) return std::chrono::milliseconds{kBackoffCapMs};
    const unsigned units = (1u << exponent) - 1u;
    return std::chrono::milliseconds{std::min(units * 10u, kBackoffCapMs)};
}

WaitPolicy WaitPolicy::backoff_timed() {
    WaitPolicy p;
    p.kind = Kind::BackoffTimed;
    p.schedule = [](unsigned n) {
        return std::chrono::duration_cast<std::chrono::microseconds>(backoff_timeout(n));
    };
    return p;
}

WaitPolicy WaitPolicy::class_timed(const ClassPolicy& policy) {
    WaitPolicy p;
    p.kind = Kind::BackoffTimed;
    p.schedule = [sleeps = policy.sleeps](unsigned n) {
        const std::size_t idx = n == 0 ? 0 : std::min<std::size_t>(n - 1, sleeps.size() - 1);
        return std::chrono::microseconds{sleeps[idx]};
    };
    return p;
}

std::chrono::microseconds WaitPolicy::sleep_for(unsigned n_wait) const {
    switch (kind) {
        case Kind::PostOnly:
            return std::chrono::microseconds::max();
        case Kind::ReliableTimed:
            return std::chrono::duration_cast<std::chrono::microseconds>(timeout);
        case Kind::BackoffTimed:
            if (schedule) return schedule(n_wait);
            return std::chrono::duration_cast<std::chrono::microseconds>(backoff_timeout(n_wait));
    }
    return std::chrono::microseconds::max();
}

}  // namespace latchkit
