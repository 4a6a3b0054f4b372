#pragma once

#include <stdexcept>
#include <string>

namespace krylovflow {

enum class ErrorKind {
  kInvalidArgument,  // bad input, bad configuration, precondition failure
  kNumerical,        // non-finite values, solver failure
  kInvariant,        // a checked invariant does not hold
  kIo,
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorKind::kInvalidArgument, what);
}

}  // namespace krylovflow
