#include "rectflow/rect_free.hpp"

#include <fmt/format.h>

#include <cmath>

#include "rectflow/errors.hpp"
#include "rectflow/mp_analytic.hpp"

namespace rectflow {

namespace {

using Ext = long double;

std::vector<Ext> widen(const std::vector<double>& v) { return std::vector<Ext>(v.begin(), v.end()); }

std::vector<double> narrow(const std::vector<Ext>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<double>(v[i]);
  return out;
}

RectCumulants<Ext> widen(const RectCumulants<double>& c) { return {static_cast<Ext>(c.alpha), widen(c.coeffs)}; }

void check_public_ratio(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw DomainError("invalid_parameters", fmt::format("rectangular ratio must lie in (0,1], got {}", alpha));
}

}  // namespace

double u_eval(double z, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw DomainError("invalid_parameters", "rectangular ratio must lie in [0,1]");
  if (alpha == 0.0) return z;
  double q = (alpha + 1.0) * (alpha + 1.0) + 4.0 * alpha * z;
  if (!(q > 0.0)) throw DomainError("branch_cut", fmt::format("U is undefined at z = {} for alpha = {}", z, alpha));
  // Rationalized to avoid cancellation near z = 0.
  return 2.0 * z / (alpha + 1.0 + std::sqrt(q));
}

RectCumulants<double> rect_r_transform(const MomentVector& nu_moments, double alpha) {
  check_public_ratio(alpha);
  auto m = widen(nu_moments.entries());
  auto C = rect_r_transform<Ext>(m, static_cast<Ext>(alpha));
  return {alpha, narrow(C.coeffs)};
}

RectCumulants<double> rect_r_transform(const SymmetricMeasure& mu, double alpha, std::size_t K) {
  return rect_r_transform(squared_moments(mu, K), alpha);
}

MomentVector rect_r_inverse(const RectCumulants<double>& C) {
  check_public_ratio(C.alpha);
  return MomentVector(narrow(rect_r_inverse<Ext>(widen(C))));
}

MomentVector rect_convolve(const RectCumulants<double>& a, const RectCumulants<double>& b) {
  if (a.alpha != b.alpha)
    throw DomainError("alpha_mismatch", fmt::format("cannot convolve ratios {} and {}", a.alpha, b.alpha));
  check_public_ratio(a.alpha);
  return MomentVector(narrow(rect_convolve<Ext>(widen(a), widen(b))));
}

MomentVector rect_convolve(const SymmetricMeasure& a, const SymmetricMeasure& b, double alpha, std::size_t K) {
  check_public_ratio(alpha);
  auto ca = rect_r_transform<Ext>(widen(squared_moments(a, K).entries()), static_cast<Ext>(alpha));
  auto cb = rect_r_transform<Ext>(widen(squared_moments(b, K).entries()), static_cast<Ext>(alpha));
  return MomentVector(narrow(rect_convolve<Ext>(ca, cb)));
}

RectCumulants<double> sqrt_mp_cumulants(double alpha, double sigma2, std::size_t K) {
  check_public_ratio(alpha);
  if (K == 0) throw DomainError("moment_order", "K must be at least 1");
  RectCumulants<double> c{alpha, std::vector<double>(K, 0.0)};
  c.coeffs[0] = sigma2;
  return c;
}

MomentVector even_from_squared(const MomentVector& nu) {
  std::vector<double> out(2 * nu.order(), 0.0);
  for (std::size_t k = 1; k <= nu.order(); ++k) out[2 * k - 1] = nu(k);
  return MomentVector(std::move(out));
}

FlowPrediction predict_mu_t(const MomentVector& nu0, const FlowParams& p, double t) {
  p.require_limit_regime();
  const std::size_t K = nu0.order();
  if (K == 0) throw DomainError("moment_order", "K must be at least 1");
  const double s2 = sigma_t2(p, t);
  const Ext decay = std::exp(-2.0L * static_cast<Ext>(p.gamma) * static_cast<Ext>(t));
  std::vector<Ext> scaled(K);
  Ext f = 1.0L;
  for (std::size_t k = 1; k <= K; ++k) {
    f *= decay;
    scaled[k - 1] = f * static_cast<Ext>(nu0(k));
  }
  const Ext a = static_cast<Ext>(p.shape());
  auto C = rect_r_transform<Ext>(scaled, a);
  C.coeffs[0] += static_cast<Ext>(s2);
  FlowPrediction out;
  out.sigma_t2 = s2;
  out.nu = MomentVector(narrow(rect_r_inverse<Ext>(C)));
  out.mu = even_from_squared(out.nu);
  return out;
}

FlowPrediction predict_mu_t(const SymmetricMeasure& mu0, const FlowParams& p, double t, std::size_t K) {
  return predict_mu_t(squared_moments(mu0, K), p, t);
}

}  // namespace rectflow
