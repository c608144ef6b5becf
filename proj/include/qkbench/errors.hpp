#pragma once

#include <stdexcept>
#include <string>

namespace qkb {

/// Base class for all qkbench errors. Subclasses map onto the CLI exit
/// codes: configuration problems exit with 2, I/O problems with 3 and
/// study-level failures with 4.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// exit code 2 (bad configuration / bad arguments)
class CapacityError : public Error {
  public:
    using Error::Error;
};
class IndexError : public Error {
  public:
    using Error::Error;
};
class ShapeError : public Error {
  public:
    using Error::Error;
};
class ConfigError : public Error {
  public:
    using Error::Error;
};
class DomainError : public Error {
  public:
    using Error::Error;
};
class LabelError : public Error {
  public:
    using Error::Error;
};
class DegenerateError : public Error {
  public:
    using Error::Error;
};
class ConditioningError : public Error {
  public:
    using Error::Error;
};
class InsufficiencyError : public Error {
  public:
    using Error::Error;
};
class GenerationError : public Error {
  public:
    using Error::Error;
};

// exit code 3 (I/O and file format problems)
class IoError : public Error {
  public:
    using Error::Error;
};
class SchemaError : public IoError {
  public:
    using IoError::IoError;
};
class IngestError : public IoError {
  public:
    using IoError::IoError;
};

// exit code 4 (a whole study failed)
class StudyError : public Error {
  public:
    using Error::Error;
};

} // namespace qkb
