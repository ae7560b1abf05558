#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace iva {

/// Base of every error raised by the harness.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidSpec : public Error {
public:
    using Error::Error;
};

/// Raised by the instruction parser. `position` is a byte offset into the input.
class ParseError : public Error {
public:
    ParseError(std::size_t position, std::string expected)
        : Error("parse error at byte " + std::to_string(position) + ": expected " + expected),
          position_(position),
          expected_(std::move(expected)) {}

    std::size_t position() const noexcept { return position_; }
    const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::string expected_;
};

class NoSlotMatch : public Error {
public:
    using Error::Error;
};

class PoolExhausted : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class CannotRender : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class EmptyInput : public Error {
public:
    using Error::Error;
};

class MissingInput : public Error {
public:
    using Error::Error;
};

class UnknownEpisode : public Error {
public:
    using Error::Error;
};

class DatasetFormatError : public Error {
public:
    using Error::Error;
};

/// A protocol message that does not match the "iva/1" schemas.
class ProtocolError : public Error {
public:
    using Error::Error;
};

/// Connection-level failure talking to a policy (spawn failure, EOF, refused socket).
class TransportError : public Error {
public:
    using Error::Error;
};

using PolicyTransportError = TransportError;

class VersionMismatch : public TransportError {
public:
    using TransportError::TransportError;
};

class PolicyTimeout : public TransportError {
public:
    using TransportError::TransportError;
};

}  // namespace iva
