#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace latchkit {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ---- latch errors ----------------------------------------------------------

/// Level/child acquisition-order rule was broken (deadlock prevention).
class OrderViolation : public Error {
public:
    OrderViolation(int held_level, int target_level, const std::string& detail)
        : Error("acquisition order violation: holding level " +
                std::to_string(held_level) + ", requested level " +
                std::to_string(target_level) + (detail.empty() ? "" : " (" + detail + ")")),
          held_level(held_level),
          target_level(target_level) {}

    int held_level;
    int target_level;
};

/// Shared-mode request on a latch without the shared capability.
class ModeUnsupported : public Error {
public:
    explicit ModeUnsupported(const std::string& latch_name)
        : Error("latch '" + latch_name + "' does not support shared mode") {}
};

/// Release by a process that does not hold the latch.
class NotHolder : public Error {
public:
    explicit NotHolder(const std::string& what) : Error(what) {}
};

/// The latch was torn down while a process was waiting on it.
class Poisoned : public Error {
public:
    Poisoned() : Error("latch destroyed while waited on") {}
};

/// Class policy string did not parse.
class MalformedPolicy : public Error {
public:
    explicit MalformedPolicy(const std::string& reason)
        : Error("malformed latch class policy: " + reason) {}
};

// ---- statistics errors -----------------------------------------------------

/// A counter decreased between two snapshots of the same latch.
class CounterRegression : public Error {
public:
    explicit CounterRegression(const std::string& what) : Error(what) {}
};

/// Snapshot interval has non-positive duration.
class ZeroInterval : public Error {
public:
    ZeroInterval() : Error("snapshot interval duration must be positive") {}
};

/// Estimator requested on inputs where it is not defined (e.g. zero rate).
class UndefinedStatistic : public Error {
public:
    explicit UndefinedStatistic(const std::string& what) : Error(what) {}
};

/// Finite-processor utilization correction needs at least two processors.
class SingleCpuInapplicable : public Error {
public:
    SingleCpuInapplicable()
        : Error("utilization correction is inapplicable with fewer than 2 CPUs/processes") {}
};

/// Malformed input file; carries a 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& reason)
        : Error("parse error at line " + std::to_string(line) + ": " + reason),
          line(line) {}

    std::size_t line;
};

// ---- model errors ----------------------------------------------------------

/// Distribution parameterization lacks the required finite moments.
class InfiniteMoment : public Error {
public:
    explicit InfiniteMoment(const std::string& what) : Error(what) {}
};

/// Asymptotic expansion requested outside its region of validity.
class PrecondViolated : public Error {
public:
    explicit PrecondViolated(const std::string& what) : Error(what) {}
};

/// Survival function does not fit an exponential tail over the probe window.
class NoExponentialTail : public Error {
public:
    explicit NoExponentialTail(const std::string& what) : Error(what) {}
};

/// Internal cross-check between algebraically equivalent routes failed.
class ModelInconsistency : public Error {
public:
    explicit ModelInconsistency(const std::string& what) : Error(what) {}
};

// ---- simulator errors ------------------------------------------------------

class ConfigInvalid : public Error {
public:
    explicit ConfigInvalid(const std::string& what) : Error(what) {}
};

class SpawnFailure : public Error {
public:
    explicit SpawnFailure(const std::string& what) : Error(what) {}
};

}  // namespace latchkit
