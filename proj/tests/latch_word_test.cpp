#include <cstdint>
#include <vector>

#include "doctest.h"
#include "latchkit/latch_word.hpp"

using namespace latchkit;
using word::kBlockingBit;
using word::kExclusiveBit;
using word::kFree;
using word::kPidMask;

namespace {

// All interesting shared-capability words for exhaustive small-state checks.
std::vector<std::uint64_t> shared_words() {
    std::vector<std::uint64_t> ws;
    for (std::uint64_t count : {0ull, 1ull, 2ull, 5ull}) {
        ws.push_back(count);
        ws.push_back(count | kBlockingBit);
    }
    ws.push_back(kExclusiveBit | 7ull);
    ws.push_back(kExclusiveBit | kBlockingBit | 7ull);
    return ws;
}

}  // namespace

TEST_CASE("exclusive-only word: the word is the holder pid") {
    CHECK(!word::held(kFree, false));
    CHECK(!word::held_exclusive(kFree, false));
    CHECK(word::can_acquire(kFree, Mode::Exclusive, false));

    const std::uint64_t w = word::acquired(kFree, Mode::Exclusive, false, 42);
    CHECK(w == 42);
    CHECK(word::held(w, false));
    CHECK(word::held_exclusive(w, false));
    CHECK(!word::can_acquire(w, Mode::Exclusive, false));
    CHECK(word::share_count(w, false) == 0);

    CHECK(word::released(w, Mode::Exclusive, false) == kFree);
}

TEST_CASE("exclusive-only word: decode") {
    const LatchState free = word::decode(kFree, false);
    CHECK(free.holder == LatchState::Holder::Free);
    CHECK(free.pid == 0);
    CHECK(!free.blocking_marked);

    const LatchState held = word::decode(321, false);
    CHECK(held.holder == LatchState::Holder::Exclusive);
    CHECK(held.pid == 321);
    CHECK(held.share_count == 0);
}

TEST_CASE("shared word: shared holders count in the low bits") {
    std::uint64_t w = kFree;
    CHECK(word::can_acquire(w, Mode::Shared, true));
    w = word::acquired(w, Mode::Shared, true, 1);
    CHECK(w == 1);
    w = word::acquired(w, Mode::Shared, true, 2);
    CHECK(w == 2);
    CHECK(word::share_count(w, true) == 2);
    CHECK(word::held(w, true));
    CHECK(!word::held_exclusive(w, true));

    w = word::released(w, Mode::Shared, true);
    CHECK(word::share_count(w, true) == 1);
    w = word::released(w, Mode::Shared, true);
    CHECK(w == kFree);
}

TEST_CASE("shared word: exclusive hold sets the exclusive bit plus pid") {
    const std::uint64_t w = word::acquired(kFree, Mode::Exclusive, true, 9);
    CHECK(w == (kExclusiveBit | 9));
    CHECK(word::held_exclusive(w, true));
    CHECK(word::share_count(w, true) == 0);

    const LatchState s = word::decode(w, true);
    CHECK(s.holder == LatchState::Holder::Exclusive);
    CHECK(s.pid == 9);

    CHECK(word::released(w, Mode::Exclusive, true) == kFree);
}

TEST_CASE("shared word: compatibility matrix at the word level") {
    const std::uint64_t free_w = kFree;
    const std::uint64_t s_held = 3;                      // three shared holders
    const std::uint64_t x_held = kExclusiveBit | 5;      // exclusive holder

    // free latch admits either mode
    CHECK(word::can_acquire(free_w, Mode::Shared, true));
    CHECK(word::can_acquire(free_w, Mode::Exclusive, true));
    // shared holders admit more shared, refuse exclusive
    CHECK(word::can_acquire(s_held, Mode::Shared, true));
    CHECK(!word::can_acquire(s_held, Mode::Exclusive, true));
    // exclusive holder refuses everything
    CHECK(!word::can_acquire(x_held, Mode::Shared, true));
    CHECK(!word::can_acquire(x_held, Mode::Exclusive, true));
}

TEST_CASE("shared word: blocking mark turns shared getters away, not exclusive ones") {
    const std::uint64_t marked_free = kFree | kBlockingBit;
    CHECK(!word::can_acquire(marked_free, Mode::Shared, true));
    CHECK(word::can_acquire(marked_free, Mode::Exclusive, true));

    // An exclusive acquisition consumes the mark.
    const std::uint64_t after = word::acquired(marked_free, Mode::Exclusive, true, 4);
    CHECK(after == (kExclusiveBit | 4));
    CHECK(!word::decode(after, true).blocking_marked);

    // A shared release leaves the mark in place for the parked exclusive waiter.
    const std::uint64_t marked_shared = 2 | kBlockingBit;
    const std::uint64_t after_rel = word::released(marked_shared, Mode::Shared, true);
    CHECK(after_rel == (1 | kBlockingBit));
    CHECK(word::decode(after_rel, true).blocking_marked);
    const std::uint64_t drained = word::released(after_rel, Mode::Shared, true);
    CHECK(drained == kBlockingBit);
    CHECK(!word::can_acquire(drained, Mode::Shared, true));
    CHECK(word::can_acquire(drained, Mode::Exclusive, true));
}

TEST_CASE("shared word: decode reports the blocking mark") {
    const LatchState s = word::decode(3 | kBlockingBit, true);
    CHECK(s.holder == LatchState::Holder::Shared);
    CHECK(s.share_count == 3);
    CHECK(s.blocking_marked);
}

TEST_CASE("word transitions: acquire permitted iff can_acquire, over small states") {
    for (const std::uint64_t w : shared_words()) {
        CAPTURE(w);
        for (const Mode m : {Mode::Shared, Mode::Exclusive}) {
            if (!word::can_acquire(w, m, true)) continue;
            const std::uint64_t after = word::acquired(w, m, true, 11);
            // The new word is held, and in the requested mode.
            CHECK(word::held(after, true));
            if (m == Mode::Exclusive) {
                CHECK(word::held_exclusive(after, true));
            } else {
                CHECK(word::share_count(after, true) == word::share_count(w, true) + 1);
            }
            // Release undoes the acquisition's effect on holders.
            const std::uint64_t back = word::released(after, m, true);
            if (m == Mode::Shared) {
                CHECK(word::share_count(back, true) == word::share_count(w, true));
            } else {
                CHECK(!word::held(back, true));
            }
        }
    }
}

TEST_CASE("pid range: the mask allows over five hundred million processes") {
    CHECK(word::kMaxPid == 0x1FFFFFFFu);
    const std::uint64_t w = word::acquired(kFree, Mode::Exclusive, true, word::kMaxPid);
    CHECK(word::decode(w, true).pid == word::kMaxPid);
}

TEST_CASE("spin budget: shared latches spin twice spin_count in exclusive mode only") {
    CHECK(spin_budget_iterations(true, Mode::Exclusive, 20000, 300) == 600);
    CHECK(spin_budget_iterations(true, Mode::Shared, 20000, 300) == 0);
}

TEST_CASE("spin budget: exclusive-only latches use the class spin") {
    CHECK(spin_budget_iterations(false, Mode::Exclusive, 20000, 300) == 20000);
    CHECK(spin_budget_iterations(false, Mode::Exclusive, 7, 300) == 7);
}
