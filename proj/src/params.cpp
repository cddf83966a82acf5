#include "rectflow/params.hpp"

#include <fmt/format.h>

#include <cmath>

#include "rectflow/errors.hpp"

namespace rectflow {

std::string to_string(Field f) { return f == Field::real ? "real" : "complex"; }

Field field_from_string(const std::string& s) {
  if (s == "real") return Field::real;
  if (s == "complex") return Field::complex;
  throw DomainError("invalid_parameters", fmt::format("field must be 'real' or 'complex', got '{}'", s));
}

void WishartParams::validate() const {
  auto bad = [](const std::string& msg) { throw DomainError("invalid_parameters", msg); };
  if (n < 1) bad(fmt::format("n must be >= 1, got {}", n));
  if (m < n) bad(fmt::format("m must be >= n, got n={} m={}", n, m));
  if (!(beta1 > 0.0) || !(beta2 > 0.0)) bad("beta1 and beta2 must be positive");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) bad("kappa must be >= 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) bad("gamma must be >= 0");
}

bool WishartParams::well_posed() const {
  double b1 = effective_beta1();
  double nn = n, mm = m;
  if (!(mm - (nn - 1.0) * beta2 > 0.0)) return false;
  return b1 * beta2 >= 1.0 || mm * b1 + (2.0 - nn) * b1 * beta2 >= 1.0;
}

void WishartParams::require_well_posed() const {
  validate();
  if (!well_posed())
    throw DomainError("well_posedness_violated",
                      fmt::format("W({}, {}) with n={} m={} fails the well-posedness gate: need m-(n-1)beta2 > 0 and "
                                  "(beta1 beta2 >= 1 or m beta1 + (2-n) beta1 beta2 >= 1)",
                                  effective_beta1(), beta2, n, m));
}

FlowParams FlowParams::from(const WishartParams& w) {
  return FlowParams{w.alpha(), w.effective_beta1(), w.beta2, w.kappa, w.gamma};
}

double FlowParams::sigma_inf2() const {
  if (!(gamma > 0.0)) throw DomainError("invalid_parameters", "stationary scale needs gamma > 0");
  return drive() / (2.0 * gamma);
}

void FlowParams::validate() const {
  auto bad = [](const std::string& msg) { throw DomainError("invalid_parameters", msg); };
  if (!(alpha > 0.0 && alpha <= 1.0)) bad(fmt::format("alpha must lie in (0,1], got {}", alpha));
  if (!(beta1 > 0.0) || !(beta2 > 0.0)) bad("beta1 and beta2 must be positive");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) bad("kappa must be >= 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) bad("gamma must be >= 0");
}

void FlowParams::require_limit_regime() const {
  validate();
  if (shape() > 1.0)
    throw DomainError("limit_regime_violated", fmt::format("beta2 alpha = {} exceeds 1", shape()));
}

}  // namespace rectflow
