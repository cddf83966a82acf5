#include "rectflow/mp_analytic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <numbers>

#include "rectflow/errors.hpp"

namespace rectflow {

MPParams::MPParams(double rho, double sigma) : rho_(rho), sigma_(sigma) {
  if (!(rho > 0.0) || !std::isfinite(rho))
    throw DomainError("invalid_parameters", fmt::format("MP shape must be positive, got {}", rho));
  if (rho > 1.0)
    throw DomainError("invalid_parameters", fmt::format("MP shape {} > 1 is not supported", rho));
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw DomainError("invalid_parameters", fmt::format("MP scale must be positive, got {}", sigma));
}

double MPParams::a_minus() const {
  double r = 1.0 - std::sqrt(rho_);
  return sigma2() * r * r;
}

double MPParams::a_plus() const {
  double r = 1.0 + std::sqrt(rho_);
  return sigma2() * r * r;
}

ComplexPoint::ComplexPoint(cplx z) : z_(z) {
  if (!(z.imag() > 0.0) || !std::isfinite(z.real()) || !std::isfinite(z.imag()))
    throw DomainError("not_upper_half_plane", fmt::format("Im z must be > 0, got {}{:+}i", z.real(), z.imag()));
}

cplx aligned_sqrt(cplx q, cplx direction) {
  cplx s = std::sqrt(q);
  if ((s * std::conj(direction)).real() < 0.0) s = -s;
  return s;
}

double mp_density(const MPParams& p, double x) {
  double lo = p.a_minus(), hi = p.a_plus();
  if (x < lo || x > hi) return 0.0;
  if (x == 0.0) return INFINITY;
  return std::sqrt((hi - x) * (x - lo)) / (2.0 * std::numbers::pi * p.rho() * x * p.sigma2());
}

namespace {

// Integral of v^k against the MP density over theta in [0, upper], v = a- + width sin^2(theta).
template <class Real>
Real theta_integral(const MPParams& p, unsigned k, Real upper, unsigned panels) {
  using boost::math::quadrature::gauss;
  const Real lo = p.a_minus(), width = p.a_plus() - p.a_minus();
  const Real pre = width * width / (std::numbers::pi_v<Real> * Real(p.rho()) * Real(p.sigma2()));
  auto f = [&](Real th) {
    Real s = std::sin(th), c = std::cos(th);
    Real v = lo + width * s * s;
    Real g = pre * s * s * c * c / v;
    for (unsigned i = 0; i < k; ++i) g *= v;
    return g;
  };
  Real total = 0;
  for (unsigned j = 0; j < panels; ++j)
    total += gauss<Real, 30>::integrate(f, upper * Real(j) / Real(panels), upper * Real(j + 1) / Real(panels));
  return total;
}

template <class Real>
std::vector<Real> quadrature_moments(const MPParams& p, std::size_t K, Real tol) {
  if (K == 0) throw DomainError("moment_order", "K must be at least 1");
  const Real half_pi = std::numbers::pi_v<Real> / 2;
  std::vector<Real> out(K);
  for (std::size_t k = 1; k <= K; ++k) {
    Real coarse = theta_integral<Real>(p, static_cast<unsigned>(k), half_pi, 1);
    Real fine = theta_integral<Real>(p, static_cast<unsigned>(k), half_pi, 2);
    Real err = std::abs(fine - coarse);
    if (err > tol * std::abs(fine))
      throw NumericalError("quadrature_not_converged",
                           fmt::format("MP moment {} reached relative tolerance {:.3g} only", k,
                                       static_cast<double>(err / std::abs(fine))));
    out[k - 1] = fine;
  }
  return out;
}

}  // namespace

double mp_cdf(const MPParams& p, double x) {
  double lo = p.a_minus(), hi = p.a_plus();
  if (x <= lo) return 0.0;
  if (x >= hi) return 1.0;
  double th = std::asin(std::sqrt((x - lo) / (hi - lo)));
  return std::clamp(theta_integral<double>(p, 0, th, 2), 0.0, 1.0);
}

MPCauchyJet mp_cauchy_jet(const MPParams& p, ComplexPoint zp) {
  const cplx z = zp.z();
  const double s2 = p.sigma2(), rho = p.rho();
  const cplx w = z - s2 * (1.0 + rho);
  const cplx S = aligned_sqrt(w * w - 4.0 * rho * s2 * s2, w);
  // G = 2 / D; this form has no cancellation for large |z|.
  const cplx D = z - s2 * (1.0 - rho) + S;
  const cplx G = 2.0 / D;
  const cplx D_z = 1.0 + w / S;
  const cplx D_s = -(1.0 - rho) + (-(1.0 + rho) * w - 4.0 * rho * s2) / S;
  return {G, -0.5 * G * G * D_z, -0.5 * G * G * D_s};
}

cplx mp_cauchy(const MPParams& p, ComplexPoint z) { return mp_cauchy_jet(p, z).G; }

MomentVector mp_moments(const MPParams& p, std::size_t K) {
  return MomentVector(quadrature_moments<double>(p, K, 1e-12));
}

std::vector<long double> mp_moments_ext(const MPParams& p, std::size_t K) {
  return quadrature_moments<long double>(p, K, 1e-15L);
}

std::size_t InversionResult::unconverged() const {
  return static_cast<std::size_t>(std::count(converged.begin(), converged.end(), false));
}

std::vector<double> default_eps_schedule() { return {0.1, 0.05, 0.025, 0.0125}; }

InversionResult stieltjes_invert(const CauchyEvaluator& g, std::span<const double> grid,
                                 std::span<const double> eps) {
  if (eps.empty()) throw DomainError("invalid_parameters", "empty epsilon schedule");
  for (std::size_t i = 0; i < eps.size(); ++i)
    if (!(eps[i] > 0.0) || (i > 0 && !(eps[i] < eps[i - 1])))
      throw DomainError("invalid_parameters", "epsilon schedule must be positive and strictly decreasing");

  InversionResult out;
  out.x.assign(grid.begin(), grid.end());
  for (double x : grid) {
    std::vector<std::vector<double>> levels(1);
    for (double e : eps) levels[0].push_back(-g(ComplexPoint(x, e)).imag() / std::numbers::pi);
    // Neville tableau toward eps = 0.
    for (std::size_t lv = 1; lv <= 2 && levels.back().size() > 1; ++lv) {
      const auto& prev = levels.back();
      std::vector<double> next;
      for (std::size_t i = 0; i + 1 < prev.size(); ++i) {
        double ei = eps[i], ej = eps[i + lv];
        next.push_back((ei * prev[i + 1] - ej * prev[i]) / (ei - ej));
      }
      levels.push_back(std::move(next));
    }
    out.density.push_back(levels.back().back());

    // Successive differences on the deepest level with at least three entries should shrink.
    bool ok = true;
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
      if (it->size() < 3) continue;
      const auto& v = *it;
      double scale = 1e-14 * std::max(1.0, std::abs(v.back()));
      for (std::size_t i = 0; i + 2 < v.size(); ++i)
        if (std::abs(v[i + 2] - v[i + 1]) > std::abs(v[i + 1] - v[i]) + scale) ok = false;
      break;
    }
    out.converged.push_back(ok);
  }
  return out;
}

InversionResult stieltjes_invert(const CauchyEvaluator& g, std::span<const double> grid) {
  auto eps = default_eps_schedule();
  return stieltjes_invert(g, grid, eps);
}

std::vector<double> support_grid(const MPParams& p, std::size_t points) {
  std::vector<double> x(points);
  double lo = p.a_minus(), dx = (p.a_plus() - lo) / static_cast<double>(points);
  for (std::size_t i = 0; i < points; ++i) x[i] = lo + dx * (static_cast<double>(i) + 0.5);
  return x;
}

double l1_on_grid(std::span<const double> grid, std::span<const double> values,
                  const std::function<double(double)>& density) {
  if (grid.size() != values.size() || grid.size() < 2)
    throw DomainError("invalid_parameters", "grid and values must match and hold at least two points");
  double dx = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
  double acc = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) acc += std::abs(values[i] - density(grid[i]));
  return acc * dx;
}

double sigma_t2(const FlowParams& p, double t) {
  if (!(t >= 0.0)) throw DomainError("invalid_parameters", fmt::format("time must be >= 0, got {}", t));
  if (p.gamma == 0.0) return p.drive() * t;
  return -p.drive() * std::expm1(-2.0 * p.gamma * t) / (2.0 * p.gamma);
}

double sigma_t(const WishartParams& w, double t) { return std::sqrt(sigma_t2(FlowParams::from(w), t)); }

}  // namespace rectflow
