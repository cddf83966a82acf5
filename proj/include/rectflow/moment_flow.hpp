#pragma once

#include <vector>

#include "rectflow/moment_vector.hpp"
#include "rectflow/params.hpp"

namespace rectflow {

struct MomentTrajectory {
  std::vector<double> times;
  std::vector<MomentVector> moments;
  // max_k |m_h - m_{h/2}| / (15 max(1, |m_{h/2}|)) at the final time; 0 when not computed.
  double error_estimate = 0.0;
};

// d/dt m^k for k = 1..K (m^0 = 1). Entry k reads m^0..m^k only.
std::vector<double> moment_rhs(const std::vector<double>& m, const FlowParams& p);

double m1_closed(const FlowParams& p, double m0_1, double t);
// gamma = 0 integrates the k = 2 equation.
double m2_closed(const FlowParams& p, double m0_1, double m0_2, double t);

struct MomentIntegration {
  double dt = 1e-3;
  double record_every = 0.0;  // <= 0 records every step
  bool error_estimate = true;  // rerun at dt/2 for a Richardson estimate
};

// Classical RK4 on a uniform grid of ceil(T/dt) steps. NumericalError("moment_overflow") on blow-up.
MomentTrajectory integrate_moments(const MomentVector& m0, const FlowParams& p, double T,
                                   const MomentIntegration& opt = {});

}  // namespace rectflow
