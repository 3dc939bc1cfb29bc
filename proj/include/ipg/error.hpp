#pragma once

#include <stdexcept>
#include <string>

namespace ipg {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed user input: bad files, bad flags, out-of-range values.
/// The CLI maps this to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure inside the training core (non-finite values).
/// The CLI maps this to exit code 3.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint file problems, one kind per failure class.
class CheckpointError : public Error {
 public:
  enum class Kind { BadMagic, BadVersion, Truncated, DigestMismatch, ShapeMismatch };

  CheckpointError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Errors talking to an external tagging service.
class TagServiceError : public Error {
 public:
  enum class Kind { Network, Status, Schema };

  TagServiceError(Kind kind, const std::string& msg, int status = 0)
      : Error(msg), kind_(kind), status_(status) {}
  Kind kind() const { return kind_; }
  int status() const { return status_; }

 private:
  Kind kind_;
  int status_;
};

}  // namespace ipg
