#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sindympc {

/// Shapes or indices that do not match what an operation requires.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Too few samples for the requested fit or stencil.
class InsufficientData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN/Inf in regression inputs.
class InvalidData : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed signal or experiment specification.
class InvalidSpec : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A simulated state became non-finite or left the configured magnitude bound.
/// `step()` is the index of the step whose result was rejected.
class IntegrationDiverged : public std::runtime_error {
public:
    IntegrationDiverged(std::size_t step, double time)
        : std::runtime_error("integration diverged at step " + std::to_string(step) + " (t = " +
                             std::to_string(time) + ")"),
          step_(step),
          time_(time) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }
    [[nodiscard]] double time() const noexcept { return time_; }

private:
    std::size_t step_;
    double      time_;
};

} // namespace sindympc
