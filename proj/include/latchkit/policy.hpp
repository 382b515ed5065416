#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <string>

namespace latchkit {

/// Per-class spin/sleep tuning, parsed from the eleven-token textual form
/// "Spin Yield Waittime Sleep0 ... Sleep7".
struct ClassPolicy {
    std::uint32_t spin = 20000;        // spin iterations per attempt (exclusive latches)
    std::uint32_t yield_count = 0;     // scheduler yields between spin exhaustion and first sleep
    std::uint32_t waittime = 1;        // base sleep unit, microseconds
    std::array<std::uint32_t, 8> sleeps{1000, 1000, 1000, 1000, 1000, 1000, 1000, 1000};

    static ClassPolicy default_class0() { return ClassPolicy{}; }

    std::string to_string() const;

    bool operator==(const ClassPolicy&) const = default;
};

/// Parses "Spin Yield Waittime Sleep0 ... Sleep7". Throws MalformedPolicy on
/// wrong token count or non-integer tokens.
ClassPolicy parse_class_policy(const std::string& text);

/// Sleep timeout for the n-th wait of one acquisition (n_wait >= 1), following
/// the legacy timed-sleep schedule: 10,10,10,30,30,70,70,150,230,390,390,710,
/// 710,1350,1350 ms, then 2000 ms forever.
std::chrono::milliseconds backoff_timeout(unsigned n_wait);

/// Analytic fit (2^floor((n+1)/2) - 1) * 10 ms, capped at 2000 ms. Tracks the
/// observed schedule closely for the first eight waits, then drifts; kept for
/// reference and tests.
std::chrono::milliseconds backoff_timeout_fitted(unsigned n_wait);

/// How a waiter blocks once its spin budget is exhausted.
struct WaitPolicy {
    enum class Kind {
        PostOnly,       // block until posted (class-0 default)
        ReliableTimed,  // re-check the latch every `timeout` even if no post arrives
        BackoffTimed,   // timed sleeps following `schedule(n_wait)`
    };

    Kind kind = Kind::PostOnly;
    std::chrono::milliseconds timeout{300};
    std::function<std::chrono::microseconds(unsigned)> schedule;  // BackoffTimed only

    static WaitPolicy post_only() { return WaitPolicy{}; }

    static WaitPolicy reliable_timed(std::chrono::milliseconds t = std::chrono::milliseconds{300}) {
        WaitPolicy p;
        p.kind = Kind::ReliableTimed;
        p.timeout = t;
        return p;
    }

    /// Legacy exponential-backoff sleeps.
    static WaitPolicy backoff_timed();

    /// Timed sleeps following a class sleep schedule (Sleep0..Sleep7 in
    /// microseconds; waits past the eighth reuse Sleep7).
    static WaitPolicy class_timed(const ClassPolicy& policy);

    /// Sleep duration for the n-th wait (n_wait >= 1) under a timed policy.
    std::chrono::microseconds sleep_for(unsigned n_wait) const;
};

}  // namespace latchkit
