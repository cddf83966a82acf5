#include "rectflow/burgers.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "rectflow/errors.hpp"

namespace rectflow {

FlowEvaluator FlowEvaluator::analytic(JetFn f, std::string label) {
  FlowEvaluator e;
  e.mode_ = DerivativeMode::analytic;
  e.jet_ = std::move(f);
  e.label_ = std::move(label);
  return e;
}

FlowEvaluator FlowEvaluator::finite_difference(ValueFn g, std::string label, double h_z, double h_t) {
  if (!(h_z > 0.0)) throw DomainError("invalid_parameters", "h_z must be positive");
  FlowEvaluator e;
  e.mode_ = DerivativeMode::finite_difference;
  e.value_ = std::move(g);
  e.label_ = std::move(label);
  e.h_z_ = h_z;
  e.h_t_ = h_t;
  return e;
}

FlowJet FlowEvaluator::operator()(double t, ComplexPoint z) const {
  if (mode_ == DerivativeMode::analytic) return jet_(t, z);
  const cplx zz = z.z();
  FlowJet j;
  j.G = value_(t, z);
  j.dG_dz = (value_(t, ComplexPoint(zz + h_z_)) - value_(t, ComplexPoint(zz - h_z_))) / (2.0 * h_z_);
  const double ht = h_t(t);
  if (t >= ht)
    j.dG_dt = (value_(t + ht, z) - value_(t - ht, z)) / (2.0 * ht);
  else
    j.dG_dt = (value_(t + ht, z) - j.G) / ht;
  return j;
}

double mp_flow_sigma2(const FlowParams& p, double sigma0, double t) {
  if (!(t >= 0.0)) throw DomainError("invalid_parameters", "time must be >= 0");
  const double s0 = sigma0 * sigma0;
  if (p.gamma == 0.0) return s0 + p.drive() * t;
  const double inf = p.drive() / (2.0 * p.gamma);
  return (s0 - inf) * std::exp(-2.0 * p.gamma * t) + inf;
}

double mp_flow_sigma(const FlowParams& p, double sigma0, double t) { return std::sqrt(mp_flow_sigma2(p, sigma0, t)); }

FlowEvaluator mp_flow(const FlowParams& p, double sigma0, double shape, double sigma_scale) {
  const double rho = shape > 0.0 ? shape : p.shape();
  const double k2 = sigma_scale * sigma_scale;
  auto jet = [p, sigma0, rho, k2](double t, ComplexPoint z) {
    const double s2 = k2 * mp_flow_sigma2(p, sigma0, t);
    const double ds2_dt = k2 * (p.drive() - 2.0 * p.gamma * mp_flow_sigma2(p, sigma0, t));
    auto mp = mp_cauchy_jet(MPParams(rho, std::sqrt(s2)), z);
    return FlowJet{mp.G, mp.dG_dz, mp.dG_dsigma2 * ds2_dt};
  };
  return FlowEvaluator::analytic(jet, fmt::format("mp shape={} sigma0={} scale={}", rho, sigma0, sigma_scale));
}

namespace {

struct StationaryParts {
  cplx G, dG_dz;
};

StationaryParts stationary_parts(const FlowParams& p, ComplexPoint zp) {
  if (!(p.gamma > 0.0)) throw DomainError("invalid_parameters", "the stationary solution needs gamma > 0");
  const double A = p.coupling(), b = p.drive(), g = p.gamma;
  if (!(A > 0.0)) throw DomainError("invalid_parameters", "the stationary solution needs kappa > 0");
  const cplx z = zp.z();
  const cplx q = 2.0 * g * z + (p.shape() - 1.0) * b;
  // Branch aligned with the vertex of the quadratic under the root, as for mp_cauchy.
  const cplx S = aligned_sqrt(q * q - 8.0 * g * A * z, q - 2.0 * A);
  // (q - S)/(2 A z) rationalized: 4 gamma / (q + S).
  const cplx D = q + S;
  const cplx G = 4.0 * g / D;
  const cplx dS = (2.0 * g * q - 4.0 * g * A) / S;
  return {G, -4.0 * g * (2.0 * g + dS) / (D * D)};
}

}  // namespace

cplx stationary_G(const FlowParams& p, ComplexPoint z) { return stationary_parts(p, z).G; }

FlowEvaluator stationary_flow(const FlowParams& p) {
  auto jet = [p](double, ComplexPoint z) {
    auto s = stationary_parts(p, z);
    return FlowJet{s.G, s.dG_dz, cplx(0.0, 0.0)};
  };
  return FlowEvaluator::analytic(jet, "stationary");
}

cplx burgers_residual(const FlowEvaluator& f, const FlowParams& p, double t, ComplexPoint zp) {
  const auto j = f(t, zp);
  const cplx z = zp.z();
  const double A = p.coupling(), b = p.drive(), g = p.gamma;
  return j.dG_dt - (A - b + 2.0 * g * z) * j.dG_dz + 2.0 * A * z * j.G * j.dG_dz + A * j.G * j.G - 2.0 * g * j.G;
}

GridSpec GridSpec::default_for(double a_plus) {
  GridSpec g;
  g.re_max = a_plus + 2.0;
  return g;
}

std::vector<ComplexPoint> GridSpec::points() const {
  if (n_re < 1 || n_im < 1) throw DomainError("invalid_parameters", "grid needs at least one point per axis");
  auto lin = [](double lo, double hi, std::size_t n, std::size_t i) {
    return n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  };
  std::vector<ComplexPoint> pts;
  for (std::size_t i = 0; i < n_re; ++i)
    for (std::size_t k = 0; k < n_im; ++k) pts.emplace_back(lin(re_min, re_max, n_re, i), lin(im_min, im_max, n_im, k));
  return pts;
}

ResidualGrid residual_grid(const FlowEvaluator& f, const FlowParams& p, double t, const GridSpec& grid) {
  ResidualGrid out;
  for (const auto& z : grid.points()) {
    cplx r = burgers_residual(f, p, t, z);
    out.rows.push_back({z.z().real(), z.z().imag(), t, r});
    out.max_abs = std::max(out.max_abs, std::abs(r));
  }
  return out;
}

std::string residual_grid_csv(const ResidualGrid& g, const std::vector<std::string>& comments) {
  std::string out;
  for (const auto& c : comments) out += "# " + c + "\n";
  out += "re_z,im_z,t,re_res,im_res,abs_res\n";
  for (const auto& r : g.rows)
    out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", r.re, r.im, r.t, r.residual.real(),
                       r.residual.imag(), std::abs(r.residual));
  return out;
}

namespace {

// Integrand of the time integral at one instant: sum_k c_k (rhs_k + correction_k).
double generator_term(const MomentVector& m, const FlowParams& p, std::span<const double> poly, const WeakFormOptions& opt) {
  const std::size_t d = poly.size() - 1;
  std::vector<double> mv(m.entries().begin(), m.entries().begin() + static_cast<std::ptrdiff_t>(d));
  auto rhs = moment_rhs(mv, p);
  double acc = 0.0;
  for (std::size_t k = 1; k <= d; ++k) {
    double term = rhs[k - 1];
    if (opt.finite_m > 0) {
      double kk = static_cast<double>(k);
      term += p.kappa * p.kappa * (2.0 - p.beta1 * p.beta2) / opt.finite_m * kk * (kk - 1.0) * m(k - 1);
    }
    acc += poly[k] * term;
  }
  return acc;
}

double pairing(const MomentVector& m, std::span<const double> poly) {
  double acc = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) acc += poly[k] * m(k);
  return acc;
}

double time_integral(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  if (n < 2) return 0.0;
  const double h = (t.back() - t.front()) / static_cast<double>(n - 1);
  bool uniform = true;
  for (std::size_t i = 1; i < n; ++i)
    if (std::abs((t[i] - t[i - 1]) - h) > 1e-9 * std::max(1.0, std::abs(h))) uniform = false;
  if (uniform && (n - 1) % 2 == 0) {
    double s = y.front() + y.back();
    for (std::size_t i = 1; i + 1 < n; ++i) s += (i % 2 ? 4.0 : 2.0) * y[i];
    return s * h / 3.0;
  }
  double s = 0.0;
  for (std::size_t i = 1; i < n; ++i) s += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

}  // namespace

double weak_form_residual(const MomentTrajectory& traj, const FlowParams& p, std::span<const double> poly,
                          const WeakFormOptions& opt) {
  if (poly.empty() || poly.size() > 7)
    throw DomainError("unsupported_test_function", "test functions are polynomials of degree <= 6");
  if (traj.times.size() < 2 || traj.times.size() != traj.moments.size())
    throw DomainError("invalid_trajectory", "need at least two time points with moments");
  const std::size_t d = poly.size() - 1;
  for (const auto& m : traj.moments)
    if (m.order() < d) throw DomainError("invalid_trajectory", fmt::format("trajectory carries fewer than {} moments", d));
  std::vector<double> integrand;
  for (const auto& m : traj.moments) integrand.push_back(generator_term(m, p, poly, opt));
  return pairing(traj.moments.back(), poly) - pairing(traj.moments.front(), poly) - time_integral(traj.times, integrand);
}

double weak_form_residual(const std::vector<std::pair<double, DiscreteMeasure>>& traj, const FlowParams& p,
                          std::span<const double> poly, const WeakFormOptions& opt) {
  MomentTrajectory mt;
  const std::size_t K = std::max<std::size_t>(1, poly.empty() ? 1 : poly.size() - 1);
  for (const auto& [t, nu] : traj) {
    mt.times.push_back(t);
    mt.moments.push_back(moments(nu, K));
  }
  return weak_form_residual(mt, p, poly, opt);
}

}  // namespace rectflow
