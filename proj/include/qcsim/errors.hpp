#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace qcsim {

// Malformed external input: config files, program text, CSV payloads.
// The CLI maps this to exit code 2.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A domain invariant or precondition was violated. Carries the name of the
// module that rejected the value; the CLI maps this to exit code 3.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(std::string module, const std::string& message)
      : std::runtime_error(module + ": " + message), module_(std::move(module)) {}

  const std::string& module_name() const { return module_; }

 private:
  std::string module_;
};

}  // namespace qcsim
