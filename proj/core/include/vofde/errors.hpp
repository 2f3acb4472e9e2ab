#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vofde {

// Argument outside the mathematical domain of an operation (poles, t <= 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Tensor or state widths that do not line up.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Series or iteration that failed to converge, or a non-finite intermediate.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A solver produced a non-finite state.
class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, std::size_t step)
        : NumericError(what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class OptimizerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file or configuration.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace vofde
