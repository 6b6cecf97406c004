#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ringflow {

/// Raised for inputs that violate a documented precondition (bad sizes,
/// non-positive densities, parameters outside their admissible range).
class InvalidInput : public std::invalid_argument {
public:
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an explicit step would exceed the admissible step ratio.
/// `step()` is the zero-based index of the step that was refused.
class CflViolation : public std::runtime_error {
public:
    CflViolation(const std::string& what, std::size_t step)
        : std::runtime_error(what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace ringflow
