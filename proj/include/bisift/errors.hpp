#pragma once

#include <stdexcept>
#include <string>

namespace bisift {

// Root of every error the library raises. Subclasses name the failure class
// so callers (and the CLI) can tell a bad file from a bad argument.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

// Bad magic, unknown version, unknown dtype, malformed text record.
class FormatError : public Error {
public:
  using Error::Error;
};

// Structurally valid header but the payload is truncated or inconsistent.
class CorruptionError : public Error {
public:
  using Error::Error;
};

// Binary scheme or representation mismatch between operands.
class SchemeError : public Error {
public:
  using Error::Error;
};

class EmptyDatabaseError : public Error {
public:
  using Error::Error;
};

class InsufficientDataError : public Error {
public:
  using Error::Error;
};

// Vocabulary size or index configuration disagreement.
class MismatchError : public Error {
public:
  using Error::Error;
};

class UndefinedRecallError : public Error {
public:
  using Error::Error;
};

class IncompleteResultsError : public Error {
public:
  using Error::Error;
};

class InvalidInputError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace bisift
