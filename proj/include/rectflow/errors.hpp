#pragma once

#include <stdexcept>
#include <string>

namespace rectflow {

// Bad input: parameter gates, preconditions, malformed files. CLI exit code 2.
class DomainError : public std::domain_error {
 public:
  DomainError(std::string code, const std::string& message);
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// The computation itself failed (non-convergence, overflow, unresolved collision). CLI exit code 3.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(std::string code, const std::string& message);
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

}  // namespace rectflow
