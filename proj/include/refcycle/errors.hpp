#pragma once

#include <stdexcept>
#include <string>

namespace refcycle {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: bad grid, bad cycle token, unreadable file, size guard.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A structural assumption (reference-monotone gains, monotone demand) failed
/// at a point where the algorithm relies on it.
class AssumptionViolation : public Error {
public:
    using Error::Error;
};

/// The exponential state graph exceeds the configured node budget.
class BudgetExceeded : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Projected redemption still exceeds the budget at the top of the search interval.
class InfeasibleBudget : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

}  // namespace refcycle
