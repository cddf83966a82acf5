#include "rectflow/errors.hpp"

#include <utility>

namespace rectflow {

DomainError::DomainError(std::string code, const std::string& message)
    : std::domain_error(message), code_(std::move(code)) {}

NumericalError::NumericalError(std::string code, const std::string& message)
    : std::runtime_error(message), code_(std::move(code)) {}

}  // namespace rectflow
