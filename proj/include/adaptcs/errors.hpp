#pragma once

#include <stdexcept>
#include <string>

namespace adaptcs {

/// Violated domain precondition or unsatisfiable request (CLI exit code 1).
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File system or format problem (CLI exit code 2).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed dataset file: wrong shape. Names file and line.
class IngestError : public IoError {
public:
    using IoError::IoError;
};

/// Unparseable token or grammar text.
class ParseError : public IoError {
public:
    using IoError::IoError;
};

}  // namespace adaptcs
