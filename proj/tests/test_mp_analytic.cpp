#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/binomial.hpp>
#include <cmath>
#include <numbers>

#include "rectflow/mp_analytic.hpp"
#include "rectflow/rng.hpp"
#include "test_util.hpp"

using namespace rectflow;

namespace {

// int f(x) rho(x) dx over the support, x = a- + (a+ - a-) sin^2(theta) to smooth the edges.
template <class F>
cplx integrate_density(const MPParams& p, F f) {
  const double lo = p.a_minus(), w = p.a_plus() - p.a_minus();
  auto part = [&](auto pick) {
    auto g = [&](double th) {
      double s = std::sin(th), c = std::cos(th);
      double x = lo + w * s * s;
      double dens = x > 0.0 ? mp_density(p, x) : 0.0;
      return pick(f(x)) * dens * 2.0 * w * s * c;
    };
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, std::numbers::pi / 2, 15, 1e-13);
  };
  return {part([](cplx v) { return v.real(); }), part([](cplx v) { return v.imag(); })};
}

// m^k of MP(rho, sigma): sigma^{2k} sum_{j<k} rho^j C(k,j) C(k-1,j) / (j+1).
double narayana_moment(double rho, double sigma, unsigned k) {
  double s = 0.0;
  for (unsigned j = 0; j < k; ++j)
    s += std::pow(rho, j) * boost::math::binomial_coefficient<double>(k, j) *
         boost::math::binomial_coefficient<double>(k - 1, j) / (j + 1.0);
  return std::pow(sigma, 2.0 * k) * s;
}

}  // namespace

TEST_CASE("parameter gates") {
  CHECK(error_code([] { MPParams(0.0, 1.0); }) == "invalid_parameters");
  CHECK(error_code([] { MPParams(1.5, 1.0); }) == "invalid_parameters");
  CHECK(error_code([] { MPParams(0.5, 0.0); }) == "invalid_parameters");
  CHECK(error_code([] { ComplexPoint(1.0, 0.0); }) == "not_upper_half_plane");
  CHECK(error_code([] { ComplexPoint(1.0, -1.0); }) == "not_upper_half_plane");
  MPParams p(0.25, 2.0);
  CHECK(p.a_minus() == doctest::Approx(4.0 * 0.25));
  CHECK(p.a_plus() == doctest::Approx(4.0 * 2.25));
}

TEST_CASE("Cauchy transform matches adaptive quadrature of the density") {
  CounterRng r(31, 0);
  for (std::uint64_t i = 0; i < 100; ++i) {
    double rho = 0.1 + 0.9 * r.uniform(0, i);
    double sigma = 0.5 + 1.5 * r.uniform(1, i);
    MPParams p(rho, sigma);
    cplx z(-1.0 + (p.a_plus() + 2.0) * r.uniform(2, i), 0.05 + 3.0 * r.uniform(3, i));
    cplx want = integrate_density(p, [z](double x) { return 1.0 / (z - x); });
    CHECK(std::abs(mp_cauchy(p, ComplexPoint(z)) - want) < 1e-9 * std::max(1.0, std::abs(want)));
  }
}

TEST_CASE("density has unit mass and the CDF is monotone") {
  for (double rho : {0.25, 0.5, 1.0}) {
    MPParams p(rho, 1.3);
    CHECK(integrate_density(p, [](double) { return cplx(1.0); }).real() == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(mp_cdf(p, p.a_minus() - 1.0) == 0.0);
    CHECK(mp_cdf(p, p.a_plus() + 1.0) == doctest::Approx(1.0));
    double prev = 0.0;
    for (int i = 0; i <= 50; ++i) {
      double x = p.a_minus() + (p.a_plus() - p.a_minus()) * i / 50.0;
      double c = mp_cdf(p, x);
      CHECK(c >= prev - 1e-15);
      prev = c;
    }
  }
  CHECK(std::isinf(mp_density(MPParams(1.0, 1.0), 0.0)));
}

TEST_CASE("quadrature moments reproduce Narayana polynomials") {
  for (double rho : {0.25, 0.5, 0.8, 1.0})
    for (double sigma : {0.5, 1.0, 2.0}) {
      MPParams p(rho, sigma);
      auto m = mp_moments(p, 8);
      auto ext = mp_moments_ext(p, 8);
      for (unsigned k = 1; k <= 8; ++k) {
        double want = narayana_moment(rho, sigma, k);
        CHECK(m(k) == doctest::Approx(want).epsilon(1e-12));
        CHECK(static_cast<double>(ext[k - 1]) == doctest::Approx(want).epsilon(1e-14));
      }
    }
}

TEST_CASE("Cauchy transform has Im G < 0 and G ~ 1/z at infinity") {
  MPParams p(0.5, 1.0);
  for (double re : {-3.0, 0.0, 1.0, 2.5, 10.0})
    for (double im : {1e-6, 0.1, 1.0, 50.0}) CHECK(mp_cauchy(p, ComplexPoint(re, im)).imag() < 0.0);
  cplx z(1e6, 1e6);
  cplx g = mp_cauchy(p, ComplexPoint(z));
  // G = 1/z + m1/z^2 + O(z^-3).
  CHECK(std::abs(g - (1.0 / z + 1.0 / (z * z))) < 1e-16);
}

TEST_CASE("jet derivatives agree with central differences") {
  for (double rho : {0.3, 1.0}) {
    MPParams p(rho, 0.9);
    const double h = 1e-5;
    for (cplx z : {cplx(0.5, 0.3), cplx(-1.0, 2.0), cplx(3.0, 0.7)}) {
      auto j = mp_cauchy_jet(p, ComplexPoint(z));
      cplx dz = (mp_cauchy(p, ComplexPoint(z + h)) - mp_cauchy(p, ComplexPoint(z - h))) / (2 * h);
      double s2 = p.sigma2();
      cplx ds = (mp_cauchy(MPParams(rho, std::sqrt(s2 + h)), ComplexPoint(z)) -
                 mp_cauchy(MPParams(rho, std::sqrt(s2 - h)), ComplexPoint(z))) /
                (2 * h);
      CHECK(std::abs(j.G - mp_cauchy(p, ComplexPoint(z))) == 0.0);
      CHECK(std::abs(j.dG_dz - dz) < 1e-8);
      CHECK(std::abs(j.dG_dsigma2 - ds) < 1e-8);
    }
  }
}

TEST_CASE("Stieltjes inversion recovers the density") {
  for (double rho : {0.25, 0.5, 1.0}) {
    MPParams p(rho, 1.0);
    auto grid = support_grid(p, 200);
    CHECK(grid.size() == 200);
    CHECK(grid.front() > p.a_minus());
    CHECK(grid.back() < p.a_plus());
    auto inv = stieltjes_invert([&p](ComplexPoint z) { return mp_cauchy(p, z); }, grid);
    CHECK(l1_on_grid(grid, inv.density, [&p](double x) { return mp_density(p, x); }) < 1e-2);
    CHECK(inv.unconverged() < grid.size() / 10);
    std::size_t mid = grid.size() / 2;
    CHECK(inv.density[mid] == doctest::Approx(mp_density(p, grid[mid])).epsilon(1e-4));
  }
  std::vector<double> bad{1e-3, 1e-2};
  std::vector<double> g{1.0};
  CHECK(error_code([&] { stieltjes_invert([](ComplexPoint) { return cplx(0, -1); }, g, bad); }) == "invalid_parameters");
}

TEST_CASE("Gaussian scale of the flow") {
  FlowParams p{0.5, 1.0, 1.0, 1.0, 1.0};
  CHECK(sigma_t2(p, 0.0) == 0.0);
  CHECK(sigma_t2(p, 1.0) == doctest::Approx((1.0 - std::exp(-2.0)) / 2.0).epsilon(1e-15));
  CHECK(sigma_t2(p, 1e-12) == doctest::Approx(1e-12).epsilon(1e-10));
  p.gamma = 0.0;
  p.kappa = 2.0;
  CHECK(sigma_t2(p, 0.5) == doctest::Approx(2.0));
  WishartParams w;
  w.n = 2;
  w.m = 4;
  w.gamma = 1.0;
  w.field = Field::complex;
  CHECK(sigma_t(w, 1.0) * sigma_t(w, 1.0) == doctest::Approx(1.0 - std::exp(-2.0)));
  CHECK(error_code([&] { sigma_t2(p, -1.0); }) == "invalid_parameters");
}
