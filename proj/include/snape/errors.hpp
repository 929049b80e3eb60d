#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace snape {

/// Invalid argument to a library call (bad sizes, non-finite bounds, ...).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Evaluation point outside the domain of a basis.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Requested derivative order is not representable by the spline order.
class DerivativeOrderError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Model-spec or expression syntax/semantic error with source position.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& message, std::size_t line, std::size_t column)
        : std::runtime_error("line " + std::to_string(line) + ", column " + std::to_string(column) +
                             ": " + message),
          line_(line),
          column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

/// Inputs are structurally inconsistent with each other (grid/axis/field mismatch).
class MismatchError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Factorization failure or a degenerate term in the ADMM updates.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A free term whose column A_j beta vanishes on the data.
class DegenerateTermError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Invalid simulator setup (CFL violation, bad grid, ...).
class SetupError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Simulator blow-up or non-finite state.
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Too many failed bootstrap replicates.
class BootstrapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace snape
