#pragma once

#include <string>

namespace rectflow {

enum class Field { real, complex };

std::string to_string(Field f);
Field field_from_string(const std::string& s);

// Finite-dimensional model constants of the W(beta1, beta2) eigenvalue system.
struct WishartParams {
  int n = 1;
  int m = 1;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double kappa = 1.0;
  double gamma = 0.0;
  Field field = Field::real;

  double alpha() const { return static_cast<double>(n) / static_cast<double>(m); }
  // The complex field runs as W(2 beta1, beta2).
  double effective_beta1() const { return field == Field::complex ? 2.0 * beta1 : beta1; }

  // n >= 1, m >= n, positive betas, kappa >= 0, gamma >= 0. DomainError("invalid_parameters").
  void validate() const;
  bool well_posed() const;
  // validate() plus the well-posedness gate. DomainError("well_posedness_violated").
  void require_well_posed() const;
};

// Constants of the limit flow. beta1 is already the effective one.
struct FlowParams {
  double alpha = 0.5;
  double beta1 = 1.0;
  double beta2 = 1.0;
  double kappa = 1.0;
  double gamma = 0.0;

  static FlowParams from(const WishartParams& w);

  double drive() const { return beta1 * kappa * kappa; }  // beta1 kappa^2
  double coupling() const { return alpha * beta1 * beta2 * kappa * kappa; }  // alpha beta1 beta2 kappa^2
  double shape() const { return beta2 * alpha; }  // MP shape of the limit
  // beta1 kappa^2 / (2 gamma); requires gamma > 0.
  double sigma_inf2() const;

  // alpha in (0,1], positive betas, kappa, gamma >= 0. DomainError("invalid_parameters").
  void validate() const;
  // beta2 alpha <= 1. DomainError("limit_regime_violated").
  void require_limit_regime() const;
};

}  // namespace rectflow
