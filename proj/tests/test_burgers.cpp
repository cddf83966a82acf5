#include <doctest.h>

#include <cmath>

#include "rectflow/burgers.hpp"
#include "rectflow/measure.hpp"
#include "rectflow/moment_flow.hpp"
#include "rectflow/mp_analytic.hpp"
#include "rectflow/replicas.hpp"
#include "rectflow/wishart_sim.hpp"
#include "test_util.hpp"

using namespace rectflow;

namespace {

const std::vector<FlowParams> kSweep = {
    {0.5, 1.0, 1.0, 1.0, 1.0}, {0.25, 2.0, 1.0, 1.5, 0.5}, {0.9, 1.5, 0.8, 0.7, 2.0}};

// G of MP(shape, sqrt(s2)) with a prescribed (and possibly wrong) rate ds2/dt.
FlowEvaluator frozen_mp(double shape, double s2, double rate) {
  return FlowEvaluator::analytic(
      [=](double, ComplexPoint z) {
        auto j = mp_cauchy_jet(MPParams(shape, std::sqrt(s2)), z);
        return FlowJet{j.G, j.dG_dz, j.dG_dsigma2 * rate};
      },
      "frozen");
}

double max_residual(const FlowEvaluator& f, const FlowParams& p, double t) {
  return residual_grid(f, p, t, GridSpec::default_for(8.0)).max_abs;
}

}  // namespace

TEST_CASE("the MP flow solves the equation and a rescaled one does not") {
  for (const auto& p : kSweep)
    for (double t : {0.0, 0.25, 1.0, 4.0}) {
      CHECK(max_residual(mp_flow(p, 0.8), p, t) < 1e-10);
      CHECK(max_residual(mp_flow(p, 0.8, 0.0, 1.05), p, t) > 1e-3);
    }
}

TEST_CASE("an MP profile is a solution only at the right scale velocity") {
  const auto& p = kSweep[2];
  for (double s2 : {0.3, 0.6, 1.2}) {
    const double right = p.drive() - 2.0 * p.gamma * s2;
    CHECK(max_residual(frozen_mp(p.shape(), s2, right), p, 0.0) < 1e-12);
    for (double off : {-0.5, -0.05, 0.05, 0.5}) CHECK(max_residual(frozen_mp(p.shape(), s2, right + off), p, 0.0) > 1e-4);
  }
  CHECK(max_residual(frozen_mp(0.7 * p.shape(), 0.6, p.drive() - 1.2 * p.gamma), p, 0.0) > 1e-3);
}

TEST_CASE("finite differences converge at second order") {
  const auto& p = kSweep[1];
  auto exact = mp_flow(p, 0.8);
  auto g = [exact](double t, ComplexPoint z) { return exact(t, z).G; };
  double r[3];
  int i = 0;
  for (double h : {4e-2, 2e-2, 1e-2})
    r[i++] = max_residual(FlowEvaluator::finite_difference(g, "fd", h, h), p, 0.5);
  CHECK(r[0] / r[1] == doctest::Approx(4.0).epsilon(0.1));
  CHECK(r[1] / r[2] == doctest::Approx(4.0).epsilon(0.1));
  CHECK(max_residual(FlowEvaluator::finite_difference(g, "fd"), p, 0.5) < 1e-6);
  // At t = 0 the time difference is one-sided, hence first order.
  CHECK(max_residual(FlowEvaluator::finite_difference(g, "fd"), p, 0.0) < 1e-3);
  CHECK(error_code([&] { FlowEvaluator::finite_difference(g, "fd", 0.0); }) == "invalid_parameters");
}

TEST_CASE("stationary solution equals the MP transform at the stationary scale") {
  for (const auto& p : kSweep) {
    MPParams st(p.shape(), std::sqrt(p.sigma_inf2()));
    for (const auto& z : GridSpec::default_for(st.a_plus()).points())
      CHECK(std::abs(stationary_G(p, z) - mp_cauchy(st, z)) < 1e-13);
    CHECK(max_residual(stationary_flow(p), p, 0.0) < 1e-12);
    CHECK(std::abs(mp_flow(p, std::sqrt(p.sigma_inf2()))(3.0, ComplexPoint(1.0, 1.0)).dG_dt) < 1e-14);
  }
  FlowParams frozen = kSweep[0];
  frozen.gamma = 0.0;
  CHECK(error_code([&] { stationary_G(frozen, ComplexPoint(0.0, 1.0)); }) == "invalid_parameters");
}

TEST_CASE("boundary values are real off the support") {
  const auto& p = kSweep[0];
  auto f = mp_flow(p, 0.8);
  const double t = 0.5;
  const double ap = MPParams(p.shape(), mp_flow_sigma(p, 0.8, t)).a_plus();
  for (double x : {-1.0, ap + 0.5, ap + 3.0}) {
    auto g = f(t, ComplexPoint(x, 1e-10)).G;
    CHECK(std::abs(g.imag()) < 1e-8);
  }
  auto inside = f(t, ComplexPoint(0.5 * ap, 1e-10)).G;
  CHECK(inside.imag() < -1e-3);
}

TEST_CASE("residual CSV has one row per grid point") {
  GridSpec g;
  g.n_re = 3;
  g.n_im = 2;
  auto res = residual_grid(mp_flow(kSweep[0], 0.8), kSweep[0], 0.5, g);
  auto csv = residual_grid_csv(res, {"note"});
  CHECK(csv.rfind("# note\nre_z,im_z,t,re_res,im_res,abs_res\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2 + 6);
}

TEST_CASE("moment trajectories satisfy the weak form") {
  const auto& p = kSweep[2];
  auto traj = integrate_moments(moments(DiscreteMeasure({0.5, 2.0}, {0.5, 0.5}), 6), p, 1.0);
  for (const std::vector<double>& f : {std::vector<double>{0, 1}, {1, -2, 0.5}, {0, 0, 0, 1}, {0, 0, 0, 0, 0, 0, 1}}) {
    double scale = 1.0;
    for (std::size_t k = 0; k < f.size(); ++k) scale += std::abs(f[k]) * (traj.moments.front()(k) + traj.moments.back()(k));
    // Simpson in time at h = 1e-3 against rates up to 2 gamma k.
    CHECK(std::abs(weak_form_residual(traj, p, f)) < 1e-8 * scale);
  }
  CHECK(error_code([&] { weak_form_residual(traj, p, std::vector<double>(8, 1.0)); }) == "unsupported_test_function");
  MomentTrajectory single;
  single.times = {0.0};
  single.moments = {traj.moments[0]};
  std::vector<double> f{0, 1};
  CHECK(error_code([&] { weak_form_residual(single, p, f); }) == "invalid_trajectory");
}

TEST_CASE("finite-n eigenvalue paths satisfy the weak form up to Monte Carlo error") {
  WishartParams w;
  w.n = 200;
  w.m = 400;
  w.kappa = 1.0;
  w.gamma = 1.0;
  const auto p = FlowParams::from(w);
  std::vector<double> init;
  for (int i = 0; i < w.n; ++i) init.push_back(0.5 + (i + 0.5) / w.n);
  SchemeOptions o;
  o.T = 0.5;
  o.dt = 1e-3;
  o.record_every = 0.05;
  const std::vector<std::vector<double>> tests{{0, 0, 1}, {0, 0, 0, 1}};
  auto s = replicas(
      [&](std::size_t r, std::uint64_t seed) {
        auto path = simulate_eigen(w, init, o, seed, r);
        std::vector<std::pair<double, DiscreteMeasure>> traj;
        for (std::size_t i = 0; i < path.times.size(); ++i)
          traj.emplace_back(path.times[i], DiscreteMeasure::empirical(path.states[i]));
        std::vector<double> out;
        for (const auto& f : tests) out.push_back(weak_form_residual(traj, p, f, WeakFormOptions{w.m}));
        return out;
      },
      50, 41);
  for (std::size_t j = 0; j < tests.size(); ++j) {
    INFO("test function ", j, " mean ", s.mean[j], " se ", s.std_error[j]);
    CHECK(std::abs(s.mean[j]) < 3.0 * s.std_error[j]);
  }
}
