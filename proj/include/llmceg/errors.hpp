#pragma once

#include <stdexcept>
#include <string>

namespace llmceg {

// All library errors derive from Error so callers can catch one type at the
// pipeline boundary and map it to an operational exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Requested counts exceed what the input can supply.
class SizeError : public Error {
public:
    using Error::Error;
};

// Tensor or vector dimensions disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

// A numeric parameter is outside its valid domain.
class ParameterError : public Error {
public:
    using Error::Error;
};

// A documented precondition on a collection does not hold (empty batch, empty corpus, ...).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// Noise calibration could not reach the requested privacy target.
class CalibrationError : public Error {
public:
    using Error::Error;
};

// File system or format problem while reading or writing artifacts.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace llmceg
