#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gnarx {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data problems: malformed files, inconsistent shapes, bad values.
class DataError : public Error {
public:
    using Error::Error;
};

class ParseError : public DataError {
public:
    using DataError::DataError;
};

class FormatError : public DataError {
public:
    using DataError::DataError;
};

class DimensionError : public DataError {
public:
    using DataError::DataError;
};

class ValidationError : public DataError {
public:
    using DataError::DataError;
};

class LookupError : public DataError {
public:
    using DataError::DataError;
};

class UnsupportedDataError : public DataError {
public:
    using DataError::DataError;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Numerical failures during estimation or simulation.
class NumericalError : public Error {
public:
    using Error::Error;
};

class SingularityError : public NumericalError {
public:
    SingularityError(const std::string& what, std::vector<int> columns = {})
        : NumericalError(what), columns_(std::move(columns)) {}

    /// Parameter columns involved in the rank deficiency (may be empty).
    [[nodiscard]] const std::vector<int>& columns() const noexcept { return columns_; }

private:
    std::vector<int> columns_;
};

class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, int step) : NumericalError(what), step_(step) {}
    [[nodiscard]] int step() const noexcept { return step_; }

private:
    int step_;
};

}  // namespace gnarx
