#pragma once

#include <stdexcept>
#include <string>

namespace hsc {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration values (CLI exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Missing inputs, unreadable files, malformed file contents (CLI exit code 3).
class IoError : public Error {
public:
    using Error::Error;
};

/// File-format violation; carries the 1-based offending line number.
class ParseError : public IoError {
public:
    ParseError(const std::string& what, long line)
        : IoError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    long line() const { return line_; }

private:
    long line_;
};

/// Numeric domain failures: points outside the disk, singular edge
/// matrices, non-positive Jacobian determinants (CLI exit code 4).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Mesh construction failures, one kind per violated invariant.
class MeshError : public Error {
public:
    enum class Kind {
        empty,
        index_out_of_range,
        degenerate_face,
        disconnected,
        param_outside_disk,
    };

    MeshError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

}  // namespace hsc
