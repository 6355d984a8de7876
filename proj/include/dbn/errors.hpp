#pragma once

#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace dbn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A matrix or vector has the wrong shape for the field it fills.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A probability row is negative somewhere or does not sum to one.
class StochasticityError : public Error {
public:
    using Error::Error;
};

/// Coupling graph problems: missing self-parent, duplicate edges,
/// couplings whose product vanishes for some parent configuration.
class TopologyError : public Error {
public:
    using Error::Error;
};

/// Parent graph of a two-slice template contains a cycle.
class CycleError : public Error {
public:
    using Error::Error;
};

/// Joint state or symbol space exceeds the configured cap.
class SizeCapError : public Error {
public:
    using Error::Error;
};

/// Brute-force enumeration refused because N^T is above the guard.
class InstanceTooLargeError : public Error {
public:
    using Error::Error;
};

class InvalidIntervalError : public Error {
public:
    using Error::Error;
};

/// Observation index outside the model's alphabet or malformed sequence.
class ObservationError : public Error {
public:
    using Error::Error;
};

/// Model or observation file could not be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

/// The observation at time `t` (0-based) has probability zero under the
/// model given everything before it.
class ImpossibleObservationError : public Error {
public:
    static constexpr std::size_t no_sequence = std::numeric_limits<std::size_t>::max();

    explicit ImpossibleObservationError(std::size_t t, std::size_t sequence = no_sequence)
        : Error(make_message(t, sequence)), time_(t), sequence_(sequence) {}

    std::size_t time() const noexcept { return time_; }
    std::size_t sequence() const noexcept { return sequence_; }

private:
    static std::string make_message(std::size_t t, std::size_t sequence) {
        std::string msg = "impossible observation at t=" + std::to_string(t);
        if (sequence != no_sequence) msg += " in sequence " + std::to_string(sequence);
        return msg;
    }

    std::size_t time_;
    std::size_t sequence_;
};

/// Every particle received zero weight at time `t`.
class DegenerateWeightsError : public Error {
public:
    explicit DegenerateWeightsError(std::size_t t)
        : Error("all particle weights are zero at t=" + std::to_string(t)), time_(t) {}

    std::size_t time() const noexcept { return time_; }

private:
    std::size_t time_;
};

}  // namespace dbn
