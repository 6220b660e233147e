#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace spdemil {

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a covariance that must be positive semidefinite is not,
/// beyond round-off. The offending matrix travels with the exception.
class NumericalDegeneracy : public std::runtime_error {
public:
    NumericalDegeneracy(const std::string& what, Eigen::MatrixXd matrix)
        : std::runtime_error(what), matrix_(std::move(matrix)) {}

    const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }

private:
    Eigen::MatrixXd matrix_;
};

/// Malformed experiment configuration. Line and column are 1-based; zero
/// means the position is unknown.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, std::size_t line, std::size_t column)
        : std::runtime_error(what), line_(line), column_(column) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

class ResourceLimitExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace spdemil
