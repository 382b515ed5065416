#pragma once

#include <cstdint>

namespace latchkit {

using Pid = std::uint32_t;

enum class Mode { Shared, Exclusive };

/// Decoded latch state.
struct LatchState {
    enum class Holder { Free, Exclusive, Shared };
    Holder holder = Holder::Free;
    Pid pid = 0;                    // Exclusive only
    std::uint32_t share_count = 0;  // Shared only
    bool blocking_marked = false;   // shared latch reserved for a parked X waiter
};

// State-word encoding. An exclusive-only latch stores the holder pid directly
// (0 = free). A shared latch stores the shared-holder count in the low bits;
// kExclusiveBit | pid marks an exclusive hold, and kBlockingBit marks that an
// exclusive waiter is parked, which keeps new shared getters out.
//
// These are pure transition functions over the word value so the same state
// machine drives both the threaded latch (through atomics) and the logical-time
// simulator (plain integers).
namespace word {

inline constexpr std::uint64_t kFree = 0;
inline constexpr std::uint64_t kPidMask = 0x1FFFFFFF;
inline constexpr std::uint64_t kExclusiveBit = 0x20000000;
inline constexpr std::uint64_t kBlockingBit = 0x40000000;

inline constexpr Pid kMaxPid = static_cast<Pid>(kPidMask);

inline bool held_exclusive(std::uint64_t w, bool shared_cap) {
    return shared_cap ? (w & kExclusiveBit) != 0 : w != kFree;
}

inline std::uint32_t share_count(std::uint64_t w, bool shared_cap) {
    if (!shared_cap || (w & kExclusiveBit)) return 0;
    return static_cast<std::uint32_t>(w & kPidMask);
}

inline bool held(std::uint64_t w, bool shared_cap) {
    return held_exclusive(w, shared_cap) || share_count(w, shared_cap) > 0;
}

/// True when a single atomic attempt in `mode` would succeed on word `w`.
/// Shared gets are compatible with other shared holders, but a blocking mark
/// or an exclusive holder turns them away. Exclusive gets need the count and
/// exclusive bit clear; the blocking mark does not stop them.
inline bool can_acquire(std::uint64_t w, Mode mode, bool shared_cap) {
    if (!shared_cap) return mode == Mode::Exclusive && w == kFree;
    if (mode == Mode::Shared) {
        return (w & (kExclusiveBit | kBlockingBit)) == 0;
    }
    return (w & ~kBlockingBit) == 0;
}

/// Word value after a successful acquisition in `mode` on `w`.
inline std::uint64_t acquired(std::uint64_t w, Mode mode, bool shared_cap, Pid pid) {
    if (!shared_cap) return pid;  // holder identity is the word itself
    if (mode == Mode::Shared) return w + 1;
    return kExclusiveBit | pid;  // consumes any blocking mark
}

/// Word value after releasing a hold in `mode`. The blocking mark survives a
/// shared release so drained shared holders leave the latch to the parked
/// exclusive waiter.
inline std::uint64_t released(std::uint64_t w, Mode mode, bool shared_cap) {
    if (!shared_cap || mode == Mode::Exclusive) return kFree;
    return w - 1;
}

inline LatchState decode(std::uint64_t w, bool shared_cap) {
    LatchState s;
    if (!shared_cap) {
        if (w != kFree) {
            s.holder = LatchState::Holder::Exclusive;
            s.pid = static_cast<Pid>(w & kPidMask);
        }
        return s;
    }
    s.blocking_marked = (w & kBlockingBit) != 0;
    if (w & kExclusiveBit) {
        s.holder = LatchState::Holder::Exclusive;
        s.pid = static_cast<Pid>(w & kPidMask);
    } else if ((w & kPidMask) != 0) {
        s.holder = LatchState::Holder::Shared;
        s.share_count = static_cast<std::uint32_t>(w & kPidMask);
    }
    return s;
}

}  // namespace word

/// Spin iterations allotted after a missed immediate get. Shared latches spin
/// 2 x spin_count in exclusive mode and not at all in shared mode; exclusive
/// latches use the class policy spin.
inline std::uint64_t spin_budget_iterations(bool shared_cap, Mode mode,
                                            std::uint32_t class_spin,
                                            std::uint32_t spin_count_param) {
    if (shared_cap) {
        return mode == Mode::Exclusive ? 2ull * spin_count_param : 0ull;
    }
    return class_spin;
}

}  // namespace latchkit
