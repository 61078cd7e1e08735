#pragma once

#include <stdexcept>
#include <string>

namespace gasest {

// Invalid physical quantity or parameter set (bad sign, NaN, wrong shape).
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// An estimator could not produce an estimate from the given data:
// singular normal equations, moment ratio outside the invertible range,
// degenerate or underdetermined data.
class EstimatorError : public std::runtime_error {
public:
    explicit EstimatorError(const std::string& what) : std::runtime_error(what) {}
};

// Config file violates the schema (unknown key, missing section, bad value).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// File could not be read or written.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace gasest
