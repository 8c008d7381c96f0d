#pragma once

#include <exception>
#include <stdexcept>
#include <string>

namespace portanet {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Extents that are zero, negative, too many, or do not conform.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Bad user-provided values (labels out of range, bad arguments).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Malformed files: bad magic, truncated payloads, wrong record sizes.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Config text that fails to parse or validate.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an API contract (aliasing buffers, policy change mid-run).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Raised by the parallel engine when a kernel throws. The original exception
/// is kept in cause().
class EngineError : public Error {
 public:
  EngineError(const std::string& what, std::exception_ptr cause)
      : Error(what), cause_(std::move(cause)) {}

  const std::exception_ptr& cause() const noexcept { return cause_; }

 private:
  std::exception_ptr cause_;
};

/// File-system failures (open/read/write).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace portanet
