#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <span>
#include <vector>

#include "rectflow/measure.hpp"
#include "rectflow/params.hpp"
#include "rectflow/series.hpp"

namespace rectflow {

using Rational = boost::multiprecision::cpp_rational;

// Coefficients c_1..c_K of the rectangular R-transform C(z) = sum c_k z^k (C(0) = 0).
template <class T>
struct RectCumulants {
  T alpha;
  std::vector<T> coeffs;

  std::size_t order() const { return coeffs.size(); }
  TruncatedSeries<T> series() const {
    std::vector<T> c(coeffs.size() + 1, T(0));
    std::copy(coeffs.begin(), coeffs.end(), c.begin() + 1);
    return TruncatedSeries<T>(std::move(c));
  }
};

template <class T>
void check_ratio(const T& alpha) {
  if (alpha < T(0) || alpha > T(1)) throw DomainError("invalid_parameters", "rectangular ratio must lie in [0,1]");
}

// M(z) = sum_{k>=1} m^k(nu) z^k where nu = mu^2; order K = number of moments.
template <class T>
TruncatedSeries<T> m_series(std::span<const T> nu_moments) {
  std::vector<T> c(nu_moments.size() + 1, T(0));
  std::copy(nu_moments.begin(), nu_moments.end(), c.begin() + 1);
  return TruncatedSeries<T>(std::move(c));
}

// H(z) = z (alpha M + 1)(M + 1); order K_M + 1.
template <class T>
TruncatedSeries<T> h_series(const TruncatedSeries<T>& M, const T& alpha) {
  if (!(M[0] == T(0))) throw DomainError("invalid_series", "M must vanish at 0");
  auto a = shift_constant(scale(M, alpha), T(1));
  auto b = shift_constant(M, T(1));
  return times_z(mul(a, b));
}

// Series solution of alpha U^2 + (alpha + 1) U = z.
template <class T>
TruncatedSeries<T> u_series(const T& alpha, std::size_t K) {
  check_ratio(alpha);
  auto U = TruncatedSeries<T>::zero(K);
  if (K == 0) return U;
  const T denom = alpha + T(1);
  U[1] = T(1) / denom;
  for (std::size_t k = 2; k <= K; ++k) {
    T acc(0);
    for (std::size_t i = 1; i < k; ++i) acc = acc + U[i] * U[k - i];
    U[k] = -alpha * acc / denom;
  }
  return U;
}

// m^1..m^K of nu -> c_1..c_K.
template <class T>
RectCumulants<T> rect_r_transform(std::span<const T> nu_moments, const T& alpha) {
  check_ratio(alpha);
  const std::size_t K = nu_moments.size();
  if (K == 0) throw DomainError("moment_order", "at least one moment is needed");
  auto H = h_series(m_series(nu_moments), alpha);   // order K+1
  auto Hinv = comp_inverse(H);                        // order K+1
  auto T1 = shift_constant(reciprocal(divide_by_z(Hinv)), T(-1));  // z/H^{-1}(z) - 1, order K
  T1[0] = T(0);
  auto C = compose(u_series(alpha, K), T1);
  return RectCumulants<T>{alpha, std::vector<T>(C.coeffs().begin() + 1, C.coeffs().end())};
}

// c_1..c_K -> m^1..m^K of nu.
template <class T>
std::vector<T> rect_r_inverse(const RectCumulants<T>& C) {
  check_ratio(C.alpha);
  const std::size_t K = C.order();
  if (K == 0) throw DomainError("moment_order", "at least one cumulant is needed");
  auto c = C.series();
  auto Tz = add(scale(mul(c, c), C.alpha), scale(c, C.alpha + T(1)));  // order K
  auto Hinv = times_z(reciprocal(shift_constant(Tz, T(1))));          // z/(1+T), order K+1
  auto H = comp_inverse(Hinv);
  auto Q = shift_constant(divide_by_z(H), T(-1));                     // alpha M^2 + (alpha+1) M
  Q[0] = T(0);
  auto M = compose(u_series(C.alpha, K), Q);
  return std::vector<T>(M.coeffs().begin() + 1, M.coeffs().end());
}

template <class T>
RectCumulants<T> add_cumulants(const RectCumulants<T>& a, const RectCumulants<T>& b) {
  if (!(a.alpha == b.alpha)) throw DomainError("alpha_mismatch", "cumulants carry different rectangular ratios");
  std::size_t K = std::min(a.order(), b.order());
  RectCumulants<T> r{a.alpha, std::vector<T>(K)};
  for (std::size_t k = 0; k < K; ++k) r.coeffs[k] = a.coeffs[k] + b.coeffs[k];
  return r;
}

template <class T>
std::vector<T> rect_convolve(const RectCumulants<T>& a, const RectCumulants<T>& b) {
  return rect_r_inverse(add_cumulants(a, b));
}

// Scalar U; alpha = 0 gives the identity. DomainError("branch_cut") on (alpha+1)^2 + 4 alpha z <= 0.
double u_eval(double z, double alpha);

// Double-precision front end; internally long double.
RectCumulants<double> rect_r_transform(const MomentVector& nu_moments, double alpha);
RectCumulants<double> rect_r_transform(const SymmetricMeasure& mu, double alpha, std::size_t K);
MomentVector rect_r_inverse(const RectCumulants<double>& C);
MomentVector rect_convolve(const RectCumulants<double>& a, const RectCumulants<double>& b);
MomentVector rect_convolve(const SymmetricMeasure& a, const SymmetricMeasure& b, double alpha, std::size_t K);
// Closed form for the symmetrized square-root MP law: C(z) = sigma2 z.
RectCumulants<double> sqrt_mp_cumulants(double alpha, double sigma2, std::size_t K);

// Even moments of mu (order 2K, odd entries 0) from the moments of nu = mu^2.
MomentVector even_from_squared(const MomentVector& nu);

struct FlowPrediction {
  double sigma_t2 = 0.0;
  MomentVector nu;  // m^k(nu_t), k = 1..K
  MomentVector mu;  // m^k(mu_t), k = 1..2K
};

// mu_t = (e^{-gamma t} mu_0) boxplus_{beta2 alpha} sqrt MP(beta2 alpha, sigma_t).
FlowPrediction predict_mu_t(const SymmetricMeasure& mu0, const FlowParams& p, double t, std::size_t K);
FlowPrediction predict_mu_t(const MomentVector& nu0, const FlowParams& p, double t);

}  // namespace rectflow
