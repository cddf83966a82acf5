#include "rectflow/moment_flow.hpp"

#include <fmt/format.h>

#include <cmath>

#include "rectflow/errors.hpp"

namespace rectflow {

std::vector<double> moment_rhs(const std::vector<double>& m, const FlowParams& p) {
  const std::size_t K = m.size();
  auto mk = [&](std::size_t k) { return k == 0 ? 1.0 : m[k - 1]; };
  const double drive = p.drive(), coupling = p.coupling();
  std::vector<double> d(K);
  for (std::size_t k = 1; k <= K; ++k) {
    double s = 0.0;
    for (std::size_t j = 0; j + 2 <= k; ++j) s += mk(j + 1) * mk(k - 2 - j) + mk(j) * mk(k - 1 - j);
    double kk = static_cast<double>(k);
    d[k - 1] = kk * drive * mk(k - 1) - 2.0 * kk * p.gamma * mk(k) + 0.5 * kk * coupling * s;
  }
  return d;
}

double m1_closed(const FlowParams& p, double m0_1, double t) {
  if (!(t >= 0.0)) throw DomainError("invalid_parameters", "time must be >= 0");
  if (p.gamma == 0.0) return m0_1 + p.drive() * t;
  double inf = p.drive() / (2.0 * p.gamma);
  return inf + (m0_1 - inf) * std::exp(-2.0 * p.gamma * t);
}

double m2_closed(const FlowParams& p, double m0_1, double m0_2, double t) {
  if (!(t >= 0.0)) throw DomainError("invalid_parameters", "time must be >= 0");
  if (p.gamma == 0.0) {
    MomentIntegration opt;
    opt.record_every = t > 0.0 ? t : 1.0;
    opt.error_estimate = false;
    if (t == 0.0) return m0_2;
    auto traj = integrate_moments(MomentVector({m0_1, m0_2}), p, t, opt);
    return traj.moments.back()(2);
  }
  const double g = p.gamma, b = p.drive(), ab = p.coupling(), a2 = p.shape();
  const double e4 = std::exp(-4.0 * g * t), e2 = std::exp(-2.0 * g * t);
  double first = (b * b + (ab - 4.0 * g * m0_1) * b + 4.0 * g * g * m0_2 - 4.0 * ab * g * m0_1) * e4;
  double second = 4.0 * b * (a2 + 1.0) * ((g * m0_1 - b / 2.0) * e2 + b / 4.0);
  return (first + second) / (4.0 * g * g);
}

namespace {

std::vector<double> axpy(const std::vector<double>& x, double a, const std::vector<double>& y) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = x[i] + a * y[i];
  return r;
}

MomentTrajectory rk4(const std::vector<double>& m0, const FlowParams& p, double T, std::size_t steps,
                     std::size_t stride) {
  MomentTrajectory traj;
  const double h = T / static_cast<double>(steps);
  std::vector<double> m = m0;
  traj.times.push_back(0.0);
  traj.moments.emplace_back(m);
  for (std::size_t s = 1; s <= steps; ++s) {
    auto k1 = moment_rhs(m, p);
    auto k2 = moment_rhs(axpy(m, 0.5 * h, k1), p);
    auto k3 = moment_rhs(axpy(m, 0.5 * h, k2), p);
    auto k4 = moment_rhs(axpy(m, h, k3), p);
    for (std::size_t i = 0; i < m.size(); ++i) {
      m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      if (!std::isfinite(m[i]) || std::abs(m[i]) > 1e300)
        throw NumericalError("moment_overflow", fmt::format("moment {} overflowed at step {} (t = {:.17g})", i + 1, s,
                                                            static_cast<double>(s) * h));
    }
    if (s % stride == 0 || s == steps) {
      traj.times.push_back(s == steps ? T : static_cast<double>(s) * h);
      traj.moments.emplace_back(m);
    }
  }
  return traj;
}

}  // namespace

MomentTrajectory integrate_moments(const MomentVector& m0, const FlowParams& p, double T, const MomentIntegration& opt) {
  if (m0.order() == 0) throw DomainError("moment_order", "K must be at least 1");
  if (!(opt.dt > 0.0)) throw DomainError("invalid_parameters", "dt must be positive");
  if (!(T >= 0.0) || !std::isfinite(T)) throw DomainError("invalid_parameters", "T must be >= 0");
  if (T == 0.0) {
    MomentTrajectory traj;
    traj.times.push_back(0.0);
    traj.moments.push_back(m0);
    return traj;
  }
  const std::size_t steps = static_cast<std::size_t>(std::ceil(T / opt.dt - 1e-9));
  const double h = T / static_cast<double>(steps);
  std::size_t stride = 1;
  if (opt.record_every > 0.0) stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(opt.record_every / h)));
  auto traj = rk4(m0.entries(), p, T, steps, stride);
  if (opt.error_estimate) {
    auto fine = rk4(m0.entries(), p, T, 2 * steps, 2 * steps);
    const auto& a = traj.moments.back().entries();
    const auto& b = fine.moments.back().entries();
    double err = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) err = std::max(err, std::abs(a[i] - b[i]) / (15.0 * std::max(1.0, std::abs(b[i]))));
    traj.error_estimate = err;
  }
  return traj;
}

}  // namespace rectflow
