#include <doctest.h>

#include <cmath>

#include "rectflow/measure.hpp"
#include "rectflow/moment_flow.hpp"
#include "rectflow/mp_analytic.hpp"
#include "rectflow/rect_free.hpp"
#include "test_util.hpp"

using namespace rectflow;

namespace {

const FlowParams kParams{0.5, 1.5, 0.8, 1.2, 0.7};

MomentVector two_point(std::size_t K) { return moments(DiscreteMeasure({0.5, 2.0}, {0.5, 0.5}), K); }

}  // namespace

TEST_CASE("MP at the stationary scale is a fixed point") {
  auto m = mp_moments(MPParams(kParams.shape(), std::sqrt(kParams.sigma_inf2())), 6);
  for (double r : moment_rhs(m.entries(), kParams)) CHECK(std::abs(r) < 1e-12);
}

TEST_CASE("right-hand side is lower triangular") {
  auto m = two_point(6).entries();
  auto base = moment_rhs(m, kParams);
  for (std::size_t j = 0; j < m.size(); ++j) {
    auto pert = m;
    pert[j] += 0.37;
    auto r = moment_rhs(pert, kParams);
    for (std::size_t k = 0; k < j; ++k) CHECK(r[k] == base[k]);
    CHECK(r[j] != base[j]);
  }
}

TEST_CASE("right-hand side is the time derivative of the convolution prediction") {
  auto nu0 = two_point(6);
  const double t = 0.8, h = 1e-4;
  auto mid = predict_mu_t(nu0, kParams, t).nu;
  auto up = predict_mu_t(nu0, kParams, t + h).nu, down = predict_mu_t(nu0, kParams, t - h).nu;
  auto rhs = moment_rhs(mid.entries(), kParams);
  for (std::size_t k = 1; k <= 6; ++k) {
    double fd = (up(k) - down(k)) / (2 * h);
    CHECK(rhs[k - 1] == doctest::Approx(fd).epsilon(1e-6));
  }
}

TEST_CASE("without mean reversion a delta0 start stays MP") {
  FlowParams p{0.5, 1.0, 1.0, 1.0, 0.0};
  MomentIntegration opt;
  opt.record_every = 0.5;
  auto traj = integrate_moments(MomentVector(std::vector<double>(6, 0.0)), p, 1.5, opt);
  REQUIRE(traj.times.size() == 4);
  for (std::size_t i = 1; i < traj.times.size(); ++i) {
    auto mp = mp_moments(MPParams(0.5, std::sqrt(p.drive() * traj.times[i])), 6);
    for (std::size_t k = 1; k <= 6; ++k) CHECK(traj.moments[i](k) == doctest::Approx(mp(k)).epsilon(1e-10));
  }
}

TEST_CASE("second moment grows monotonically without mean reversion") {
  FlowParams p = kParams;
  p.gamma = 0.0;
  auto traj = integrate_moments(two_point(2), p, 2.0);
  for (std::size_t i = 1; i < traj.times.size(); ++i) CHECK(traj.moments[i](2) >= traj.moments[i - 1](2));
  CHECK(m2_closed(p, 1.25, 2.125, 2.0) == doctest::Approx(traj.moments.back()(2)).epsilon(1e-10));
}

TEST_CASE("closed forms agree with the integrator") {
  auto nu0 = two_point(2);
  auto traj = integrate_moments(nu0, kParams, 2.0);
  for (std::size_t i = 0; i < traj.times.size(); i += 50) {
    double t = traj.times[i];
    CHECK(traj.moments[i](1) == doctest::Approx(m1_closed(kParams, nu0(1), t)).epsilon(1e-10));
    CHECK(traj.moments[i](2) == doctest::Approx(m2_closed(kParams, nu0(1), nu0(2), t)).epsilon(1e-10));
  }
  CHECK(m1_closed(kParams, 1.25, 0.0) == 1.25);
  CHECK(m2_closed(kParams, 1.25, 2.125, 0.0) == doctest::Approx(2.125));
}

TEST_CASE("RK4 converges at fourth order and the Richardson estimate tracks the error") {
  auto nu0 = two_point(4);
  auto exact = predict_mu_t(nu0, kParams, 1.0).nu;
  double err[2];
  for (int i = 0; i < 2; ++i) {
    MomentIntegration opt;
    opt.dt = i == 0 ? 0.1 : 0.05;
    auto traj = integrate_moments(nu0, kParams, 1.0, opt);
    err[i] = std::abs(traj.moments.back()(4) - exact(4));
    if (i == 1) CHECK(traj.error_estimate > 0.0);
  }
  CHECK(err[0] / err[1] == doctest::Approx(16.0).epsilon(0.15));
}

TEST_CASE("uniform grid lands on T exactly") {
  MomentIntegration opt;
  opt.dt = 0.3;
  opt.error_estimate = false;
  auto traj = integrate_moments(two_point(2), kParams, 1.0, opt);
  CHECK(traj.times.back() == 1.0);
  CHECK(traj.times.size() == 5);
  CHECK(traj.error_estimate == 0.0);
}

TEST_CASE("blow-up raises moment_overflow") {
  FlowParams p = kParams;
  p.gamma = 0.0;
  std::vector<double> huge;
  for (int k = 1; k <= 6; ++k) huge.push_back(std::pow(1e50, k));
  CHECK(error_code([&] { integrate_moments(MomentVector(huge), p, 1.0); }) == "moment_overflow");
}
