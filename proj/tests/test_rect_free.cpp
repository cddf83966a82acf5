#include <doctest.h>

#include <cmath>

#include "rectflow/mp_analytic.hpp"
#include "rectflow/rect_free.hpp"
#include "rectflow/rng.hpp"
#include "test_util.hpp"

using namespace rectflow;
using Q = Rational;

namespace {

// Moments m^1..m^K of sum_i w_i delta_{a_i} with small rational atoms and weights.
std::vector<Q> rational_moments(std::uint64_t seed, std::size_t K) {
  CounterRng r(seed, 0);
  std::vector<Q> a, w;
  int total = 0;
  for (std::uint64_t i = 0; i < 3; ++i) {
    a.emplace_back(static_cast<int>(r.uniform(0, i) * 7.0), 3);
    int wi = 1 + static_cast<int>(r.uniform(1, i) * 4.0);
    w.emplace_back(wi);
    total += wi;
  }
  std::vector<Q> m(K, Q(0));
  for (std::size_t i = 0; i < a.size(); ++i) {
    Q p = 1;
    for (std::size_t k = 0; k < K; ++k) {
      p *= a[i];
      m[k] += w[i] * p / total;
    }
  }
  return m;
}

// Narayana moments of MP(rho, 1) in exact arithmetic.
std::vector<Q> narayana(const Q& rho, std::size_t K) {
  auto binom = [](unsigned n, unsigned k) {
    Q b = 1;
    for (unsigned i = 1; i <= k; ++i) b = b * Q(n - k + i) / Q(i);
    return b;
  };
  std::vector<Q> m;
  for (unsigned k = 1; k <= K; ++k) {
    Q s = 0, p = 1;
    for (unsigned j = 0; j < k; ++j) {
      s += p * binom(k, j) * binom(k - 1, j) / Q(j + 1);
      p *= rho;
    }
    m.push_back(s);
  }
  return m;
}

std::vector<double> to_double(const std::vector<Q>& v) {
  std::vector<double> out;
  for (const auto& x : v) out.push_back(static_cast<double>(x));
  return out;
}

}  // namespace

TEST_CASE("square-root MP has a purely linear cumulant series, exactly") {
  for (Q rho : {Q(1, 4), Q(1, 2), Q(2, 3), Q(1)}) {
    auto C = rect_r_transform<Q>(narayana(rho, 8), rho);
    CHECK(C.coeffs[0] == Q(1));
    for (std::size_t k = 1; k < 8; ++k) CHECK(C.coeffs[k] == Q(0));
  }
}

TEST_CASE("transform and inverse are exact inverses") {
  for (Q alpha : {Q(0), Q(1, 3), Q(1, 2), Q(1)})
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
      auto m = rational_moments(seed, 7);
      CHECK(rect_r_inverse(rect_r_transform<Q>(m, alpha)) == m);
      RectCumulants<Q> c{alpha, {Q(1, 2), Q(-1, 5), Q(3), Q(0), Q(7, 11)}};
      CHECK(rect_r_transform<Q>(rect_r_inverse(c), alpha).coeffs == c.coeffs);
    }
}

TEST_CASE("cumulants scale homogeneously under dilation") {
  const Q s(5, 2);
  for (Q alpha : {Q(1, 2), Q(1)}) {
    auto m = rational_moments(7, 6);
    auto scaled = m;
    Q p = 1;
    for (auto& x : scaled) x *= (p *= s);
    auto c = rect_r_transform<Q>(m, alpha), cs = rect_r_transform<Q>(scaled, alpha);
    p = 1;
    for (std::size_t k = 0; k < 6; ++k) CHECK(cs.coeffs[k] == c.coeffs[k] * (p *= s));
  }
}

TEST_CASE("convolution is commutative and associative, with delta0 as unit") {
  for (Q alpha : {Q(1, 2), Q(1)}) {
    auto a = rect_r_transform<Q>(rational_moments(1, 6), alpha);
    auto b = rect_r_transform<Q>(rational_moments(2, 6), alpha);
    auto c = rect_r_transform<Q>(rational_moments(3, 6), alpha);
    CHECK(rect_convolve(a, b) == rect_convolve(b, a));
    auto ab = rect_r_transform<Q>(rect_convolve(a, b), alpha);
    auto bc = rect_r_transform<Q>(rect_convolve(b, c), alpha);
    CHECK(rect_convolve(ab, c) == rect_convolve(a, bc));
    RectCumulants<Q> zero{alpha, std::vector<Q>(6, Q(0))};
    CHECK(rect_convolve(a, zero) == rect_r_inverse(a));
  }
}

TEST_CASE("double front end agrees with exact arithmetic") {
  for (double alpha : {0.25, 0.5, 1.0}) {
    Q qa(static_cast<int>(alpha * 4), 4);
    auto m = rational_moments(5, 8);
    auto exact = rect_r_transform<Q>(m, qa);
    auto approx = rect_r_transform(MomentVector(to_double(m)), alpha);
    for (std::size_t k = 0; k < 8; ++k)
      CHECK(approx.coeffs[k] == doctest::Approx(static_cast<double>(exact.coeffs[k])).epsilon(1e-12).scale(1.0));
    auto back = rect_r_inverse(approx);
    for (std::size_t k = 1; k <= 8; ++k) CHECK(back(k) == doctest::Approx(static_cast<double>(m[k - 1])).epsilon(1e-12));
  }
}

TEST_CASE("measure and moment routes agree") {
  auto nu = DiscreteMeasure({0.25, 1.0, 4.0}, {0.25, 0.5, 0.25});
  auto mu = sym(pushforward(nu, PushMap::sqrt()));
  auto via_measure = rect_r_transform(mu, 0.5, 5);
  auto via_moments = rect_r_transform(moments(nu, 5), 0.5);
  for (std::size_t k = 0; k < 5; ++k) CHECK(via_measure.coeffs[k] == doctest::Approx(via_moments.coeffs[k]).epsilon(1e-13));
  auto conv = rect_convolve(mu, mu, 0.5, 5);
  auto conv2 = rect_convolve(via_moments, via_moments);
  for (std::size_t k = 1; k <= 5; ++k) CHECK(conv(k) == doctest::Approx(conv2(k)).epsilon(1e-13));
}

TEST_CASE("square-root MP cumulants reproduce MP moments") {
  for (double alpha : {0.25, 0.5, 1.0})
    for (double sigma : {0.5, 1.0, 2.0}) {
      auto m = rect_r_inverse(sqrt_mp_cumulants(alpha, sigma * sigma, 8));
      auto want = mp_moments(MPParams(alpha, sigma), 8);
      for (std::size_t k = 1; k <= 8; ++k) CHECK(m(k) == doctest::Approx(want(k)).epsilon(1e-12));
    }
}

TEST_CASE("u_eval solves the quadratic on the principal branch") {
  for (double alpha : {0.0, 0.25, 1.0})
    for (double z : {-0.2, 0.0, 0.3, 5.0}) {
      double u = u_eval(z, alpha);
      CHECK(alpha * u * u + (alpha + 1.0) * u == doctest::Approx(z).epsilon(1e-14).scale(1.0));
    }
  CHECK(u_eval(0.0, 0.5) == 0.0);
  CHECK(error_code([] { u_eval(-10.0, 1.0); }) == "branch_cut");
}

TEST_CASE("error codes") {
  auto a = sqrt_mp_cumulants(0.5, 1.0, 4), b = sqrt_mp_cumulants(0.25, 1.0, 4);
  CHECK(error_code([&] { rect_convolve(a, b); }) == "alpha_mismatch");
  CHECK(error_code([] { sqrt_mp_cumulants(1.5, 1.0, 4); }) == "invalid_parameters");
  CHECK(error_code([] { rect_r_transform(MomentVector(std::vector<double>{}), 0.5); }) == "moment_order");
  CHECK(error_code([] { rect_r_transform(MomentVector({1.0}), -0.1); }) == "invalid_parameters");
}

TEST_CASE("even_from_squared interleaves zeros") {
  auto mu = even_from_squared(MomentVector({2.0, 5.0}));
  CHECK(mu.entries() == std::vector<double>{0.0, 2.0, 0.0, 5.0});
}

TEST_CASE("delta0 start predicts square-root MP at the flow scale") {
  FlowParams p{0.5, 1.0, 1.0, 1.0, 1.0};
  for (double t : {0.25, 1.0, 3.0}) {
    auto pred = predict_mu_t(MomentVector(std::vector<double>(6, 0.0)), p, t);
    CHECK(pred.sigma_t2 == doctest::Approx(sigma_t2(p, t)));
    auto mp = mp_moments(MPParams(p.shape(), std::sqrt(pred.sigma_t2)), 6);
    for (std::size_t k = 1; k <= 6; ++k) CHECK(pred.nu(k) == doctest::Approx(mp(k)).epsilon(1e-12));
    CHECK(pred.mu.order() == 12);
    CHECK(pred.mu(2) == doctest::Approx(pred.nu(1)));
  }
}

TEST_CASE("without noise the prediction is the decayed initial law") {
  FlowParams p{0.5, 1.0, 1.0, 0.0, 0.7};
  auto nu0 = moments(DiscreteMeasure({0.5, 2.0}, {0.5, 0.5}), 4);
  auto pred = predict_mu_t(nu0, p, 1.5);
  for (std::size_t k = 1; k <= 4; ++k)
    CHECK(pred.nu(k) == doctest::Approx(nu0(k) * std::exp(-2.0 * 0.7 * 1.5 * k)).epsilon(1e-13));
  auto mu0 = sym(pushforward(DiscreteMeasure({0.5, 2.0}, {0.5, 0.5}), PushMap::sqrt()));
  auto pm = predict_mu_t(mu0, p, 1.5, 4);
  for (std::size_t k = 1; k <= 4; ++k) CHECK(pm.nu(k) == doctest::Approx(pred.nu(k)).epsilon(1e-13));
}
