#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fibernoise {

enum class ErrorKind {
  InvalidArgument,
  Config,
  Io,
  DegenerateData,
  NoConvergence,
  NonPositiveCovariance,
  Overflow,
  TooManyDivergences,
  ZeroIntensity,
  UnsupportedOrdering,
};

std::string_view to_string(ErrorKind kind);

/// Process exit status used by the command-line front end for each error kind:
/// 2 for configuration and input-data problems, 3 for simulation failures, 4 for I/O.
int exit_code(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message) : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::InvalidArgument, message);
}

}  // namespace fibernoise
