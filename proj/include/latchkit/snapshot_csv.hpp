#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "latchkit/stats.hpp"

namespace latchkit::stats {

/// One snapshot row bound to the latch it was taken from.
struct Snapshot {
    std::string latch_id;
    LatchStats stats;
};

inline constexpr const char* kSnapshotCsvHeader =
    "latch_id,timestamp_s,gets,misses,sleeps,spin_gets,wait_time_us,"
    "immediate_gets,immediate_misses";

/// Parses snapshot CSV. Requires the exact header above on line one, then one
/// row per snapshot. Blank lines are skipped and trailing carriage returns are
/// tolerated. Validates per latch_id (in file order) that timestamps strictly
/// increase (ParseError) and that no counter regresses (CounterRegression).
/// Returns rows stably sorted by timestamp.
std::vector<Snapshot> read_snapshots(std::istream& in);
std::vector<Snapshot> read_snapshots_file(const std::string& path);

void write_snapshots(std::ostream& out, const std::vector<Snapshot>& rows);

}  // namespace latchkit::stats
