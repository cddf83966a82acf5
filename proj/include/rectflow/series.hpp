#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <cstddef>
#include <vector>

#include "rectflow/errors.hpp"

namespace rectflow {

// sum_{k=0}^{K} c_k z^k, known exactly through order K. Operations never read past K and
// return the order through which their result is determined (noted per function).
template <class T>
class TruncatedSeries {
 public:
  TruncatedSeries() : c_(1, T(0)) {}
  explicit TruncatedSeries(std::vector<T> coeffs) : c_(std::move(coeffs)) {
    if (c_.empty()) throw DomainError("invalid_series", "a series needs at least the constant term");
  }
  static TruncatedSeries zero(std::size_t K) { return TruncatedSeries(std::vector<T>(K + 1, T(0))); }
  static TruncatedSeries identity(std::size_t K) {
    auto s = zero(K);
    if (K >= 1) s.c_[1] = T(1);
    return s;
  }

  std::size_t order() const { return c_.size() - 1; }
  const T& operator[](std::size_t k) const { return c_.at(k); }
  T& operator[](std::size_t k) { return c_.at(k); }
  const std::vector<T>& coeffs() const { return c_; }

  TruncatedSeries truncated(std::size_t K) const {
    std::vector<T> c(c_.begin(), c_.begin() + static_cast<std::ptrdiff_t>(std::min(K, order()) + 1));
    return TruncatedSeries(std::move(c));
  }

 private:
  std::vector<T> c_;
};

// Order min(K_a, K_b).
template <class T>
TruncatedSeries<T> add(const TruncatedSeries<T>& a, const TruncatedSeries<T>& b) {
  std::size_t K = std::min(a.order(), b.order());
  auto r = TruncatedSeries<T>::zero(K);
  for (std::size_t k = 0; k <= K; ++k) r[k] = a[k] + b[k];
  return r;
}

template <class T>
TruncatedSeries<T> scale(const TruncatedSeries<T>& a, const T& s) {
  auto r = a;
  for (std::size_t k = 0; k <= r.order(); ++k) r[k] = r[k] * s;
  return r;
}

// Adds s to the constant term.
template <class T>
TruncatedSeries<T> shift_constant(const TruncatedSeries<T>& a, const T& s) {
  auto r = a;
  r[0] = r[0] + s;
  return r;
}

// Order min(K_a, K_b).
template <class T>
TruncatedSeries<T> mul(const TruncatedSeries<T>& a, const TruncatedSeries<T>& b) {
  std::size_t K = std::min(a.order(), b.order());
  auto r = TruncatedSeries<T>::zero(K);
  for (std::size_t i = 0; i <= K; ++i) {
    if (a[i] == T(0)) continue;
    for (std::size_t j = 0; i + j <= K; ++j) r[i + j] = r[i + j] + a[i] * b[j];
  }
  return r;
}

// z * a: order K_a + 1.
template <class T>
TruncatedSeries<T> times_z(const TruncatedSeries<T>& a) {
  std::vector<T> c(a.order() + 2, T(0));
  for (std::size_t k = 0; k <= a.order(); ++k) c[k + 1] = a[k];
  return TruncatedSeries<T>(std::move(c));
}

// a / z for a(0) = 0: order K_a - 1.
template <class T>
TruncatedSeries<T> divide_by_z(const TruncatedSeries<T>& a) {
  if (!(a[0] == T(0))) throw DomainError("invalid_series", "division by z needs a zero constant term");
  if (a.order() == 0) throw DomainError("invalid_series", "division by z of an order-0 series");
  std::vector<T> c(a.coeffs().begin() + 1, a.coeffs().end());
  return TruncatedSeries<T>(std::move(c));
}

// 1 / a for a(0) != 0: order K_a.
template <class T>
TruncatedSeries<T> reciprocal(const TruncatedSeries<T>& a) {
  if (a[0] == T(0)) throw DomainError("invalid_series", "reciprocal needs a nonzero constant term");
  auto r = TruncatedSeries<T>::zero(a.order());
  r[0] = T(1) / a[0];
  for (std::size_t k = 1; k <= a.order(); ++k) {
    T acc(0);
    for (std::size_t j = 1; j <= k; ++j) acc = acc + a[j] * r[k - j];
    r[k] = -acc / a[0];
  }
  return r;
}

// a(b(z)) by Horner; needs b(0) = 0. Order min(K_a, K_b).
template <class T>
TruncatedSeries<T> compose(const TruncatedSeries<T>& a, const TruncatedSeries<T>& b) {
  if (!(b[0] == T(0))) throw DomainError("invalid_series", "composition needs an inner series with zero constant term");
  std::size_t K = std::min(a.order(), b.order());
  auto inner = b.truncated(K);
  auto r = TruncatedSeries<T>::zero(K);
  r[0] = a[K];
  for (std::size_t k = K; k-- > 0;) r = shift_constant(mul(r, inner), a[k]);
  return r;
}

// g with a(g(z)) = z; needs a(0) = 0 and a'(0) != 0. Order K_a.
template <class T>
TruncatedSeries<T> comp_inverse(const TruncatedSeries<T>& a) {
  if (a.order() < 1) throw DomainError("invalid_series", "compositional inverse needs order >= 1");
  if (!(a[0] == T(0))) throw DomainError("invalid_series", "compositional inverse needs a(0) = 0");
  if (a[1] == T(0)) throw DomainError("invalid_series", "compositional inverse needs a'(0) != 0");
  auto g = TruncatedSeries<T>::zero(a.order());
  g[1] = T(1) / a[1];
  for (std::size_t k = 2; k <= a.order(); ++k) {
    // With g_k still zero, [z^k] a(g) collects everything but a_1 g_k.
    auto partial = compose(a.truncated(k), g.truncated(k));
    g[k] = -partial[k] / a[1];
  }
  return g;
}

}  // namespace rectflow
