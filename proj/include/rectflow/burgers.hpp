#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rectflow/measure.hpp"
#include "rectflow/moment_flow.hpp"
#include "rectflow/mp_analytic.hpp"
#include "rectflow/params.hpp"

namespace rectflow {

struct FlowJet {
  cplx G;
  cplx dG_dz;
  cplx dG_dt;
};

enum class DerivativeMode { analytic, finite_difference };

// A time-dependent Cauchy transform with its z and t derivatives.
class FlowEvaluator {
 public:
  using JetFn = std::function<FlowJet(double, ComplexPoint)>;
  using ValueFn = std::function<cplx(double, ComplexPoint)>;

  static FlowEvaluator analytic(JetFn f, std::string label);
  // Central difference in z; in t central when t >= h_t, forward otherwise. h_t <= 0 selects 1e-5 (1 + t).
  static FlowEvaluator finite_difference(ValueFn g, std::string label, double h_z = 1e-4, double h_t = 0.0);

  FlowJet operator()(double t, ComplexPoint z) const;

  DerivativeMode mode() const { return mode_; }
  const std::string& label() const { return label_; }
  double h_z() const { return h_z_; }
  double h_t(double t) const { return h_t_ > 0.0 ? h_t_ : 1e-5 * (1.0 + t); }

 private:
  DerivativeMode mode_ = DerivativeMode::analytic;
  std::string label_;
  JetFn jet_;
  ValueFn value_;
  double h_z_ = 0.0;
  double h_t_ = 0.0;
};

// sigma(t)^2 of the MP flow started at scale sigma0.
double mp_flow_sigma2(const FlowParams& p, double sigma0, double t);
double mp_flow_sigma(const FlowParams& p, double sigma0, double t);

// G of MP(shape, sigma_scale * sigma(t)) with analytic derivatives; shape <= 0 selects beta2 alpha.
FlowEvaluator mp_flow(const FlowParams& p, double sigma0, double shape = 0.0, double sigma_scale = 1.0);

// Closed-form stationary solution; needs gamma > 0 and kappa > 0.
cplx stationary_G(const FlowParams& p, ComplexPoint z);
FlowEvaluator stationary_flow(const FlowParams& p);

cplx burgers_residual(const FlowEvaluator& f, const FlowParams& p, double t, ComplexPoint z);

struct GridSpec {
  double re_min = -2.0, re_max = 6.0, im_min = 0.5, im_max = 5.0;
  std::size_t n_re = 20, n_im = 20;
  // Re z in [-2, a_plus + 2], Im z in [0.5, 5], 20 x 20.
  static GridSpec default_for(double a_plus);
  std::vector<ComplexPoint> points() const;
};

struct ResidualRow {
  double re, im, t;
  cplx residual;
};

struct ResidualGrid {
  std::vector<ResidualRow> rows;
  double max_abs = 0.0;
};

ResidualGrid residual_grid(const FlowEvaluator& f, const FlowParams& p, double t, const GridSpec& grid);
// Columns re_z, im_z, t, re_res, im_res, abs_res.
std::string residual_grid_csv(const ResidualGrid& g, const std::vector<std::string>& comments = {});

struct WeakFormOptions {
  // Adds kappa^2 (2 - beta1 beta2)/m * int <nu_s, x f''> ds, the O(1/m) drift of the
  // finite-n empirical measure. m <= 0 disables it.
  int finite_m = 0;
};

// <nu_T, f> - <nu_0, f> - int_0^T (generator of the limit flow applied to f) ds for a polynomial
// f = sum c_k x^k (degree <= 6). Simpson in time on uniform even grids, trapezoid otherwise.
double weak_form_residual(const MomentTrajectory& traj, const FlowParams& p, std::span<const double> poly,
                          const WeakFormOptions& opt = {});
double weak_form_residual(const std::vector<std::pair<double, DiscreteMeasure>>& traj, const FlowParams& p,
                          std::span<const double> poly, const WeakFormOptions& opt = {});

}  // namespace rectflow
