#pragma once

#include <stdexcept>
#include <string>

namespace toxtopic {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad input data or configuration. The CLI maps these to exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Header or column layout does not match a file contract.
class SchemaError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Input bytes are not valid UTF-8.
class EncodingError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Binary artifact violates its layout (magic, sizes, values).
class FormatError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Head training produced a non-finite loss.
class DivergenceError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Filesystem failures. The CLI maps these to exit code 2.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace toxtopic
