#pragma once

#include <stdexcept>
#include <string>

namespace ddcrane {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NonFiniteState : public Error {
public:
    using Error::Error;
};

class DegenerateSignal : public Error {
public:
    using Error::Error;
};

class TooShort : public Error {
public:
    using Error::Error;
};

class OutOfBounds : public Error {
public:
    using Error::Error;
};

class ChannelMismatch : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// Raised when a constrained problem has no feasible point (bounds too tight).
class Infeasible : public Error {
public:
    using Error::Error;
};

class MaxIters : public Error {
public:
    using Error::Error;
};

class DegenerateNullspace : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace ddcrane
