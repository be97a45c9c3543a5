#pragma once

#include <stdexcept>
#include <string>

namespace stf {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// File or subprocess I/O failure.
class IoError : public Error {
public:
    using Error::Error;
};

// Malformed, truncated or unsupported input file.
class FormatError : public Error {
public:
    using Error::Error;
};

// Value or dimension contract violation (bad arguments, broken invariants).
class DataError : public Error {
public:
    using Error::Error;
};

// Operation would exceed a configured resource budget.
class ResourceError : public Error {
public:
    using Error::Error;
};

// A spectrum lost its conjugate symmetry; the inverse transform is no longer real.
class SymmetryError : public Error {
public:
    using Error::Error;
};

// Experiment configuration or command template problem.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace stf
