#pragma once

#include <complex>
#include <functional>
#include <span>
#include <vector>

#include "rectflow/moment_vector.hpp"
#include "rectflow/params.hpp"

namespace rectflow {

using cplx = std::complex<double>;

// Marchenko-Pastur law with shape rho in (0,1] and scale sigma > 0.
class MPParams {
 public:
  MPParams(double rho, double sigma);
  double rho() const { return rho_; }
  double sigma() const { return sigma_; }
  double sigma2() const { return sigma_ * sigma_; }
  double a_minus() const;
  double a_plus() const;

 private:
  double rho_;
  double sigma_;
};

// A point of the open upper half-plane.
class ComplexPoint {
 public:
  explicit ComplexPoint(cplx z);
  ComplexPoint(double re, double im) : ComplexPoint(cplx(re, im)) {}
  const cplx& z() const { return z_; }

 private:
  cplx z_;
};

// Square root of q with the sign chosen so that Re(root * conj(direction)) >= 0.
cplx aligned_sqrt(cplx q, cplx direction);

// Absolutely continuous MP density. At x = 0 = a_minus it returns +inf.
double mp_density(const MPParams& p, double x);
double mp_cdf(const MPParams& p, double x);

cplx mp_cauchy(const MPParams& p, ComplexPoint z);

struct MPCauchyJet {
  cplx G;
  cplx dG_dz;
  cplx dG_dsigma2;  // derivative with respect to the squared scale at fixed shape
};
MPCauchyJet mp_cauchy_jet(const MPParams& p, ComplexPoint z);

// m^1..m^K by quadrature after x = a- + (a+ - a-) sin^2(theta).
// NumericalError("quadrature_not_converged") when one and two panels disagree.
MomentVector mp_moments(const MPParams& p, std::size_t K);
std::vector<long double> mp_moments_ext(const MPParams& p, std::size_t K);

using CauchyEvaluator = std::function<cplx(ComplexPoint)>;

struct InversionResult {
  std::vector<double> x;
  std::vector<double> density;
  std::vector<bool> converged;
  std::size_t unconverged() const;
};

std::vector<double> default_eps_schedule();
// Richardson (Neville) extrapolation of -Im g(x + i eps)/pi to eps = 0, at most two levels.
InversionResult stieltjes_invert(const CauchyEvaluator& g, std::span<const double> grid,
                                 std::span<const double> eps_schedule);
InversionResult stieltjes_invert(const CauchyEvaluator& g, std::span<const double> grid);

// points cell centres over [a-, a+].
std::vector<double> support_grid(const MPParams& p, std::size_t points);
// Midpoint-rule L1 distance between samples on a uniform cell-centred grid and a density.
double l1_on_grid(std::span<const double> grid, std::span<const double> values,
                  const std::function<double(double)>& density);

// Squared scale of the Gaussian part at time t (effective beta1 already in params).
double sigma_t2(const FlowParams& p, double t);
double sigma_t(const WishartParams& w, double t);

}  // namespace rectflow
