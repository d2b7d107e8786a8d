#pragma once

#include <stdexcept>
#include <string>

namespace pathsim {

// Base for every error raised by the library. The message is prefixed with
// the module that raised it, e.g. "ham_decomp: term 0 is not diagonal ...".
class Error : public std::runtime_error {
 public:
  Error(const std::string& module, const std::string& what)
      : std::runtime_error(module + ": " + what), module_(module) {}
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
};

// A precondition on the arguments was violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

// A desk-scale size cap was exceeded.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

// An internal consistency check failed during a computation.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

}  // namespace pathsim
