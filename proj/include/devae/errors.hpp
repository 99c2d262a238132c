#pragma once

#include <stdexcept>
#include <string>

namespace devae {

// Every library failure derives from Error so callers can catch one type.
// The CLI maps the subclasses onto exit codes (see cli.hpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shapes that do not line up (tensor ops, model input/latent width).
class DimensionError : public Error {
public:
    using Error::Error;
};

// Caller violated a precondition (non-scalar backward, mixed heads, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

// Argument outside the domain of a function (BCE target outside [0,1]).
class DomainError : public Error {
public:
    using Error::Error;
};

// A loss or gradient became NaN/Inf.
class DivergenceError : public Error {
public:
    using Error::Error;
};

// Malformed input file (IDX, CSV, projection CSV).
class ParseError : public Error {
public:
    using Error::Error;
};

// Dataset unusable for the requested operation (too small, zero variance).
class DataError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

// Covariance or ellipse input that is not symmetric positive definite.
class GeometryError : public Error {
public:
    using Error::Error;
};

class UnsupportedHeadError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace devae
