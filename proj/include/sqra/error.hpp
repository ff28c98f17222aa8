#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqra {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of a scalar function (e.g. h'(0)).
class DomainError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Boundary coefficients violate alpha > beta > 0.
class BoundaryDataError : public Error {
public:
    BoundaryDataError(const std::string& what, std::vector<std::size_t> faces)
        : Error(what), faces_(std::move(faces)) {}
    const std::vector<std::size_t>& faces() const noexcept { return faces_; }

private:
    std::vector<std::size_t> faces_;
};

class LinearSolveFailure : public Error {
public:
    using Error::Error;
};

/// Newton did not meet its stopping rule. `step` is the time-step index
/// (1-based) when raised from a time march, 0 otherwise.
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, std::size_t iterations, double increment, std::size_t step = 0)
        : Error(what), iterations_(iterations), increment_(increment), step_(step) {}
    std::size_t iterations() const noexcept { return iterations_; }
    double increment() const noexcept { return increment_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t iterations_;
    double increment_;
    std::size_t step_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace sqra
