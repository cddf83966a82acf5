#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rectflow/params.hpp"
#include "rectflow/rng.hpp"

namespace rectflow {

struct EigenPath {
  std::vector<double> times;
  std::vector<std::vector<double>> states;  // each sorted ascending, >= 0
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  std::string scheme;
  std::uint64_t substeps = 0;
  std::uint64_t bridge_refinements = 0;
  double min_substep = 0.0;

  std::size_t n() const { return states.empty() ? 0 : states.front().size(); }
  const std::vector<double>& final_state() const { return states.back(); }
};

struct SchemeOptions {
  double dt = 0.0;            // largest substep; <= 0 selects default_dt
  double T = 1.0;
  double record_every = 0.0;  // <= 0 records t = 0 and t = T only
  bool jitter = false;        // spread coincident initial values into a micro-fan
  double jitter_width = 1e-6;
  double taming = 0.5;         // a pair's mutual displacement per substep is capped at taming * gap
  double tamed_fraction = 0.2;  // substep halves while more adjacent pairs than this fraction are capped
  int max_halvings = 20;        // collision retries
  double collision_tol = 1e-12;
};

double default_dt(const WishartParams& w);

// Each run of coincident values x (relative 1e-12) becomes x + width * j/(k-1), j = 0..k-1.
std::vector<double> jitter_degenerate(std::vector<double> values, double width);

// Exponential Euler for the W(beta1, beta2) eigenvalue system: the linear -2 gamma lambda part is
// integrated exactly, the constant and interaction drift are frozen over the substep, the
// square-root diffusion uses sqrt(max(lambda, 0)). Interaction forces are tamed pairwise, states are
// projected to [0, inf) and re-sorted. A substep producing a gap below collision_tol (1 + lambda) is
// refined by Brownian-bridge halving of the same increment, at most max_halvings deep.
EigenPath simulate_eigen(const WishartParams& w, std::vector<double> init, const SchemeOptions& opt,
                         std::uint64_t seed, std::uint64_t stream = 0);

// Exact OU transitions of the n x m matrix started at [diag(sqrt(m lambda0)) | 0]; eigenvalues of
// M M^* / m at each observation time. Needs beta2 = 1 and effective beta1 in {1, 2}
// (1: real entries, 2: complex entries with real and imaginary parts each of the real variance).
EigenPath simulate_matrix_oracle(const WishartParams& w, std::span<const double> init,
                                 std::span<const double> obs_times, std::uint64_t seed, std::uint64_t stream = 0);

// Eigenvalues of G G^* / m, G with i.i.d. centered entries of variance sigma_inf^2 (E|g|^2 for complex).
std::vector<double> sample_stationary(int n, int m, double sigma_inf, Field field, std::uint64_t seed,
                                      std::uint64_t stream = 0);

// rows x cols matrix of N(0, sd^2) entries; row r uses rng address (address, 2r + part).
Eigen::MatrixXd gaussian_matrix(int rows, int cols, double sd, const CounterRng& rng, std::uint64_t address,
                                std::uint32_t part = 0);
// Sorted eigenvalues of M M^* / cols, clamped at 0.
std::vector<double> gram_eigenvalues(const Eigen::MatrixXd& M);
std::vector<double> gram_eigenvalues(const Eigen::MatrixXcd& M);

}  // namespace rectflow
