#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace speckle {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument value was violated (M <= 0, negative weight, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Two images that must share a shape do not.
class DimensionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  enum class Kind {
    open_failed,
    malformed_header,
    truncated_payload,
    unsupported_maxval,
    non_finite_payload,
    write_failed,
  };

  IoError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// Floating-point failure: overflow of e^{g-z}, non-finite iterates.
/// Carries the outer iteration index when raised from inside the solver.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what,
                        std::optional<int> iteration = std::nullopt)
      : Error(iteration ? what + " (iteration " + std::to_string(*iteration) + ")"
                        : what),
        iteration_(iteration) {}

  std::optional<int> iteration() const noexcept { return iteration_; }

 private:
  std::optional<int> iteration_;
};

}  // namespace speckle
