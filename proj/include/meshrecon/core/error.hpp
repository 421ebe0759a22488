#pragma once

#include <stdexcept>
#include <string>

namespace meshrecon {

// Every failure carries a stable kebab-case code that the CLI prints as
// "ERR <code>: <message>".
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

// Bad inputs, malformed files, violated preconditions. CLI exit status 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Failures of the numerics themselves. CLI exit status 2.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace meshrecon
