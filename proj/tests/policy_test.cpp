#include <chrono>
#include <string>

#include "doctest.h"
#include "latchkit/errors.hpp"
#include "latchkit/policy.hpp"

using namespace latchkit;
using std::chrono::microseconds;
using std::chrono::milliseconds;

TEST_CASE("timed backoff schedule: first sixteen waits, exact") {
    const unsigned expected[16] = {10,  10,  10,  30,  30,  70,   70,   150,
                                   230, 390, 390, 710, 710, 1350, 1350, 2000};
    for (unsigned n = 1; n <= 16; ++n) {
        CAPTURE(n);
        CHECK(backoff_timeout(n) == milliseconds{expected[n - 1]});
    }
}

TEST_CASE("timed backoff schedule: capped at two seconds forever after") {
    CHECK(backoff_timeout(16) == milliseconds{2000});
    CHECK(backoff_timeout(17) == milliseconds{2000});
    CHECK(backoff_timeout(100) == milliseconds{2000});
    CHECK(backoff_timeout(1u << 31) == milliseconds{2000});
}

TEST_CASE("timed backoff schedule: zeroth wait treated as the first") {
    CHECK(backoff_timeout(0) == backoff_timeout(1));
}

TEST_CASE("fitted backoff form: (2^floor((n+1)/2) - 1) * 10 ms with cap") {
    CHECK(backoff_timeout_fitted(1) == milliseconds{10});
    CHECK(backoff_timeout_fitted(2) == milliseconds{10});
    CHECK(backoff_timeout_fitted(3) == milliseconds{30});
    CHECK(backoff_timeout_fitted(4) == milliseconds{30});
    CHECK(backoff_timeout_fitted(5) == milliseconds{70});
    CHECK(backoff_timeout_fitted(6) == milliseconds{70});
    CHECK(backoff_timeout_fitted(7) == milliseconds{150});
    CHECK(backoff_timeout_fitted(8) == milliseconds{150});
    CHECK(backoff_timeout_fitted(9) == milliseconds{310});
    CHECK(backoff_timeout_fitted(13) == milliseconds{1270});
    CHECK(backoff_timeout_fitted(14) == milliseconds{1270});
    // Exponent reaches 8 -> cap.
    CHECK(backoff_timeout_fitted(15) == milliseconds{2000});
    CHECK(backoff_timeout_fitted(40) == milliseconds{2000});
    CHECK(backoff_timeout_fitted(0) == backoff_timeout_fitted(1));
}

TEST_CASE("fitted backoff tracks the observed schedule early, drifts later") {
    // Within 3x for the first eight waits (same order of magnitude)...
    for (unsigned n = 1; n <= 8; ++n) {
        CAPTURE(n);
        const auto fit = backoff_timeout_fitted(n).count();
        const auto obs = backoff_timeout(n).count();
        CHECK(fit <= 3 * obs);
        CHECK(obs <= 3 * fit);
    }
    // ...but not identical everywhere (the observed table is authoritative).
    CHECK(backoff_timeout_fitted(3) != backoff_timeout(3));
}

TEST_CASE("class policy: default textual form round-trips") {
    const ClassPolicy def = ClassPolicy::default_class0();
    CHECK(def.spin == 20000);
    CHECK(def.yield_count == 0);
    CHECK(def.waittime == 1);
    for (auto s : def.sleeps) CHECK(s == 1000);

    const std::string text = def.to_string();
    CHECK(text == "20000 0 1 1000 1000 1000 1000 1000 1000 1000 1000");
    CHECK(parse_class_policy(text) == def);
}

TEST_CASE("class policy: parses explicit eleven-token strings") {
    const ClassPolicy p = parse_class_policy("100 2 5 1 2 3 4 5 6 7 8");
    CHECK(p.spin == 100);
    CHECK(p.yield_count == 2);
    CHECK(p.waittime == 5);
    for (std::uint32_t i = 0; i < 8; ++i) CHECK(p.sleeps[i] == i + 1);

    // Arbitrary whitespace between tokens is fine.
    CHECK(parse_class_policy("  100\t2  5 1 2 3 4 5 6 7 8 ") == p);
}

TEST_CASE("class policy: malformed strings are rejected") {
    CHECK_THROWS_AS(parse_class_policy(""), MalformedPolicy);
    CHECK_THROWS_AS(parse_class_policy("20000 0 1"), MalformedPolicy);
    CHECK_THROWS_AS(parse_class_policy("1 2 3 4 5 6 7 8 9 10"), MalformedPolicy);        // 10 tokens
    CHECK_THROWS_AS(parse_class_policy("1 2 3 4 5 6 7 8 9 10 11 12"), MalformedPolicy);  // 12 tokens
    CHECK_THROWS_AS(parse_class_policy("20k 0 1 1 1 1 1 1 1 1 1"), MalformedPolicy);     // non-integer
    CHECK_THROWS_AS(parse_class_policy("-5 0 1 1 1 1 1 1 1 1 1"), MalformedPolicy);      // negative
    CHECK_THROWS_AS(parse_class_policy("1.5 0 1 1 1 1 1 1 1 1 1"), MalformedPolicy);     // fractional
    CHECK_THROWS_AS(parse_class_policy("1 2 3 4 5 6 7 8 9 10 1e3"), MalformedPolicy);    // exponent
}

TEST_CASE("wait policy: post-only never wakes on its own") {
    const WaitPolicy p = WaitPolicy::post_only();
    CHECK(p.kind == WaitPolicy::Kind::PostOnly);
    CHECK(p.sleep_for(1) == microseconds::max());
    CHECK(p.sleep_for(50) == microseconds::max());
}

TEST_CASE("wait policy: reliable timed re-checks at a fixed period") {
    const WaitPolicy def = WaitPolicy::reliable_timed();
    CHECK(def.kind == WaitPolicy::Kind::ReliableTimed);
    CHECK(def.timeout == milliseconds{300});
    CHECK(def.sleep_for(1) == microseconds{300000});
    CHECK(def.sleep_for(99) == microseconds{300000});

    const WaitPolicy fast = WaitPolicy::reliable_timed(milliseconds{50});
    CHECK(fast.sleep_for(7) == microseconds{50000});
}

TEST_CASE("wait policy: backoff timed follows the legacy schedule") {
    const WaitPolicy p = WaitPolicy::backoff_timed();
    CHECK(p.kind == WaitPolicy::Kind::BackoffTimed);
    CHECK(p.sleep_for(1) == microseconds{10000});
    CHECK(p.sleep_for(4) == microseconds{30000});
    CHECK(p.sleep_for(16) == microseconds{2000000});
    CHECK(p.sleep_for(200) == microseconds{2000000});
}

TEST_CASE("wait policy: class timed uses Sleep0..Sleep7 then repeats the last") {
    ClassPolicy cp;
    cp.sleeps = {1, 2, 3, 4, 5, 6, 7, 8};
    const WaitPolicy p = WaitPolicy::class_timed(cp);
    CHECK(p.kind == WaitPolicy::Kind::BackoffTimed);
    for (unsigned n = 1; n <= 8; ++n) {
        CAPTURE(n);
        CHECK(p.sleep_for(n) == microseconds{n});
    }
    CHECK(p.sleep_for(9) == microseconds{8});
    CHECK(p.sleep_for(12) == microseconds{8});
    CHECK(p.sleep_for(0) == microseconds{1});
}
