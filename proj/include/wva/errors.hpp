#pragma once

#include <stdexcept>
#include <string>

namespace wva {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user-supplied parameter (n_max too small, malformed config, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Truncation guard tripped: population leaked into the top Fock levels.
class InvalidStateError : public Error {
public:
    using Error::Error;
};

/// An operation was called outside its contract (e.g. unnormalized input).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Pre- and postselection are orthogonal; the weak value is undefined.
class UndefinedWeakValueError : public Error {
public:
    using Error::Error;
};

/// Pointer-shift denominator vanished.
class UndefinedShiftError : public Error {
public:
    using Error::Error;
};

/// Degenerate postselection leaves no defined pointer state.
class UndefinedStateError : public Error {
public:
    using Error::Error;
};

/// Requested measurement outcome has (numerically) zero probability.
class ImpossibleOutcomeError : public Error {
public:
    using Error::Error;
};

/// Heralding kept zero shots; no pointer statistics available.
class EmptyPostselectionError : public Error {
public:
    using Error::Error;
};

/// Least-squares fit is degenerate or under-determined.
class FitError : public Error {
public:
    using Error::Error;
};

/// Moment extraction failed (wrong curvature sign, too few points, ...).
class ExtractionError : public Error {
public:
    using Error::Error;
};

/// Requested numerical accuracy is unattainable on the given grid.
class AccuracyError : public Error {
public:
    using Error::Error;
};

/// The kinetic-energy bound excludes every distribution on the grid.
class InfeasibleBoundError : public Error {
public:
    using Error::Error;
};

}  // namespace wva
