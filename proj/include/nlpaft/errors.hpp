#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace nlpaft {

/// Input violates a documented precondition (bad dimensions, non-finite values, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Argument outside the domain of a function (e.g. a prior gradient at beta_j = 0).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// An iterative solver hit its iteration cap. Carries the last iterate.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, Eigen::VectorXd last_iterate, double grad_norm)
        : std::runtime_error(what), last_iterate_(std::move(last_iterate)), grad_norm_(grad_norm) {}

    const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
    double grad_norm() const noexcept { return grad_norm_; }

private:
    Eigen::VectorXd last_iterate_;
    double grad_norm_;
};

/// A numerical quantity that must be well defined was not (indefinite Hessian at a mode, ...).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input file. row is 1-based over data rows (0 = header), column is the header name.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t row, std::string column)
        : std::runtime_error(what), row_(row), column_(std::move(column)) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

/// Context attached to a failure further down (iteration index, covariate, model).
/// The original exception is available through std::rethrow_if_nested.
class ContextError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

/// Rethrows the in-flight exception nested inside a ContextError whose message
/// is `context + ": " + inner.what()`. Must be called from a catch block.
[[noreturn]] inline void rethrow_with_context(const std::string& context) {
    try {
        throw;
    } catch (const std::exception& e) {
        std::throw_with_nested(ContextError(context + ": " + e.what()));
    }
}

}  // namespace detail
}  // namespace nlpaft
