#include "latchkit/snapshot_csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "latchkit/errors.hpp"

namespace latchkit::stats {

namespace {

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::uint64_t parse_counter(const std::string& tok, std::size_t line_no, const char* field) {
    std::uint64_t value = 0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || tok.empty()) {
        throw ParseError(line_no, std::string(field) + ": expected a non-negative integer, got '" + tok + "'");
    }
    return value;
}

double parse_timestamp(const std::string& tok, std::size_t line_no) {
    try {
        std::size_t consumed = 0;
        double value = std::stod(tok, &consumed);
        if (consumed != tok.size()) throw std::invalid_argument(tok);
        if (!(value >= 0.0)) {
            throw ParseError(line_no, "timestamp_s must be non-negative, got '" + tok + "'");
        }
        return value;
    } catch (const ParseError&) {
        throw;
    } catch (const std::exception&) {
        throw ParseError(line_no, "timestamp_s: expected a number, got '" + tok + "'");
    }
}

void check_no_regression(const Snapshot& prev, const Snapshot& cur, std::size_t line_no) {
    struct Field {
        const char* name;
        std::uint64_t LatchStats::* member;
    };
    static constexpr Field kFields[] = {
        {"gets", &LatchStats::gets},
        {"misses", &LatchStats::misses},
        {"sleeps", &LatchStats::sleeps},
        {"spin_gets", &LatchStats::spin_gets},
        {"wait_time_us", &LatchStats::wait_time_us},
        {"immediate_gets", &LatchStats::immediate_gets},
        {"immediate_misses", &LatchStats::immediate_misses},
    };
    for (const auto& f : kFields) {
        if (cur.stats.*(f.member) < prev.stats.*(f.member)) {
            throw CounterRegression("latch '" + cur.latch_id + "' line " + std::to_string(line_no) +
                                    ": " + f.name + " decreased from " +
                                    std::to_string(prev.stats.*(f.member)) + " to " +
                                    std::to_string(cur.stats.*(f.member)));
        }
    }
}

}  // namespace

std::vector<Snapshot> read_snapshots(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    // Header.
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        if (line != kSnapshotCsvHeader) {
            throw ParseError(line_no, "bad header; expected '" + std::string(kSnapshotCsvHeader) + "'");
        }
        break;
    }
    if (line_no == 0) throw ParseError(1, "empty input: missing header");

    std::vector<Snapshot> rows;
    std::map<std::string, std::size_t> last_row_for;  // latch_id -> index into rows

    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;

        auto fields = split_fields(line);
        if (fields.size() != 9) {
            throw ParseError(line_no, "expected 9 comma-separated fields, got " +
                                          std::to_string(fields.size()));
        }
        Snapshot snap;
        snap.latch_id = fields[0];
        if (snap.latch_id.empty()) throw ParseError(line_no, "latch_id must not be empty");
        snap.stats.timestamp_s = parse_timestamp(fields[1], line_no);
        snap.stats.gets = parse_counter(fields[2], line_no, "gets");
        snap.stats.misses = parse_counter(fields[3], line_no, "misses");
        snap.stats.sleeps = parse_counter(fields[4], line_no, "sleeps");
        snap.stats.spin_gets = parse_counter(fields[5], line_no, "spin_gets");
        snap.stats.wait_time_us = parse_counter(fields[6], line_no, "wait_time_us");
        snap.stats.immediate_gets = parse_counter(fields[7], line_no, "immediate_gets");
        snap.stats.immediate_misses = parse_counter(fields[8], line_no, "immediate_misses");

        auto it = last_row_for.find(snap.latch_id);
        if (it != last_row_for.end()) {
            const Snapshot& prev = rows[it->second];
            if (!(snap.stats.timestamp_s > prev.stats.timestamp_s)) {
                throw ParseError(line_no, "latch '" + snap.latch_id +
                                              "': timestamps must strictly increase");
            }
            check_no_regression(prev, snap, line_no);
        }
        rows.push_back(std::move(snap));
        last_row_for[rows.back().latch_id] = rows.size() - 1;
    }

    std::stable_sort(rows.begin(), rows.end(), [](const Snapshot& a, const Snapshot& b) {
        return a.stats.timestamp_s < b.stats.timestamp_s;
    });
    return rows;
}

std::vector<Snapshot> read_snapshots_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigInvalid("cannot open snapshot file '" + path + "'");
    return read_snapshots(in);
}

void write_snapshots(std::ostream& out, const std::vector<Snapshot>& rows) {
    out << kSnapshotCsvHeader << '\n';
    for (const auto& row : rows) {
        std::ostringstream ts;
        ts.precision(15);
        ts << row.stats.timestamp_s;
        out << row.latch_id << ',' << ts.str() << ',' << row.stats.gets << ','
            << row.stats.misses << ',' << row.stats.sleeps << ',' << row.stats.spin_gets << ','
            << row.stats.wait_time_us << ',' << row.stats.immediate_gets << ','
            << row.stats.immediate_misses << '\n';
    }
}

}  // namespace latchkit::stats
