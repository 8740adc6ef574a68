#pragma once

#include <stdexcept>
#include <string>

namespace smsprobe {

// Base for every failure the harness reports. The CLI maps each subclass to
// an exit code (data errors -> 2, transport errors -> 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data: malformed manifest lines, inconsistent plans, cache misses.
class DataError : public Error {
public:
    using Error::Error;
};

// A request violates the client-side contract or the backend's declared
// capabilities. Raised before anything is sent.
class ValidationError : public DataError {
public:
    using DataError::DataError;
};

// The backend answered, but the body does not follow the wire protocol.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Connection refused, timeouts, non-2xx statuses after the retry budget.
class TransportError : public Error {
public:
    using Error::Error;
};

}  // namespace smsprobe
