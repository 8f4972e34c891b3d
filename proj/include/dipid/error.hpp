// error.hpp: exception types shared by every module.
//
// Every failure carries a short machine-readable kind so the CLI can emit
// {"error": {"kind": ..., "message": ...}} without string matching.

#pragma once

#include <stdexcept>
#include <string>

namespace dipid {

class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

// Bad input: malformed matrices, out-of-range indices, non-finite values.
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message) : Error("validation", message) {}
};

// Step policy could not be honoured (dt underflow, step budget exceeded).
class PropagationError : public Error {
public:
    explicit PropagationError(const std::string& message) : Error("propagation", message) {}
};

// Coupling graph is disconnected or the spectrum has degenerate transitions.
class UncontrollableError : public Error {
public:
    explicit UncontrollableError(const std::string& message) : Error("uncontrollable", message) {}
};

// Steering optimizer stalled below its fidelity target.
class SteeringError : public Error {
public:
    SteeringError(const std::string& message, double best_fidelity)
        : Error("steering", message), best_fidelity_(best_fidelity) {}

    double best_fidelity() const noexcept { return best_fidelity_; }

private:
    double best_fidelity_;
};

// Internal bookkeeping went wrong (e.g. an oscillating term without its conjugate).
class ConsistencyError : public Error {
public:
    explicit ConsistencyError(const std::string& message) : Error("consistency", message) {}
};

}  // namespace dipid
