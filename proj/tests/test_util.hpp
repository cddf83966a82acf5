#pragma once

#include <string>

#include "rectflow/errors.hpp"

// Code of the rectflow error thrown by f, or "none".
template <class F>
std::string error_code(F&& f) {
  try {
    f();
  } catch (const rectflow::DomainError& e) {
    return e.code();
  } catch (const rectflow::NumericalError& e) {
    return e.code();
  }
  return "none";
}
