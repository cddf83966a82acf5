#include "rectflow/wishart_sim.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "rectflow/errors.hpp"
#include "rectflow/rng.hpp"

namespace rectflow {

namespace {

using Vec = std::vector<double>;

class Stepper {
 public:
  Stepper(const WishartParams& w, const SchemeOptions& opt, const CounterRng& rng)
      : n_(static_cast<std::size_t>(w.n)),
        drive_(w.effective_beta1() * w.kappa * w.kappa),
        coupling_(w.effective_beta1() * w.beta2 * w.kappa * w.kappa / w.m),
        gamma_(w.gamma),
        noise_(2.0 * w.kappa / std::sqrt(static_cast<double>(w.m))),
        taming_(opt.taming),
        tol_(opt.collision_tol),
        max_depth_(opt.max_halvings),
        rng_(rng),
        drift_(n_) {}

  bool interacting() const { return coupling_ > 0.0; }

  // Integrating factor weight: int_0^h e^{-2 gamma s} ds.
  double phi(double h) const { return gamma_ == 0.0 ? h : -std::expm1(-2.0 * gamma_ * h) / (2.0 * gamma_); }

  std::size_t tamed_adjacent(const Vec& l, double h) const {
    if (!interacting()) return 0;
    const double ph = phi(h);
    std::size_t count = 0;
    for (std::size_t i = 0; i + 1 < n_; ++i) {
      double gap = l[i + 1] - l[i];
      if (2.0 * ph * coupling_ * (l[i] + l[i + 1]) > taming_ * gap * gap) ++count;
    }
    return count;
  }

  void advance(Vec& l, double h, const Vec& dW, std::uint64_t event, std::uint32_t node, int depth) {
    Vec out(n_);
    propose(l, h, dW, out);
    if (!collides(out)) {
      l.swap(out);
      return;
    }
    if (depth >= max_depth_)
      throw NumericalError("collision_unresolved",
                           fmt::format("collision not resolved after {} halvings at step {}", max_depth_, event));
    ++refinements;
    Vec z(n_), w1(n_), w2(n_);
    rng_.fill_normals(z, event, node);
    const double half_sd = 0.5 * std::sqrt(h);
    for (std::size_t i = 0; i < n_; ++i) {
      w1[i] = 0.5 * dW[i] + half_sd * z[i];
      w2[i] = dW[i] - w1[i];
    }
    advance(l, 0.5 * h, w1, event, 2 * node, depth + 1);
    advance(l, 0.5 * h, w2, event, 2 * node + 1, depth + 1);
  }

  std::uint64_t refinements = 0;

 private:
  void propose(const Vec& l, double h, const Vec& dW, Vec& out) {
    const double ph = phi(h);
    const double decay = std::exp(-2.0 * gamma_ * h);
    std::fill(drift_.begin(), drift_.end(), drive_);
    if (interacting()) {
      const double cap = taming_ / (2.0 * ph);
      for (std::size_t i = 0; i < n_; ++i) {
        const double li = l[i];
        double acc = 0.0;
        for (std::size_t j = i + 1; j < n_; ++j) {
          const double del = li - l[j];
          if (del == 0.0) continue;
          double f = coupling_ * (li + l[j]) / del;
          const double lim = cap * std::abs(del);
          if (std::abs(f) > lim) f = std::copysign(lim, f);
          acc += f;
          drift_[j] -= f;
        }
        drift_[i] += acc;
      }
    }
    for (std::size_t i = 0; i < n_; ++i) {
      const double x = decay * l[i] + ph * drift_[i] + noise_ * std::sqrt(std::max(l[i], 0.0)) * dW[i];
      out[i] = std::max(x, 0.0);
    }
    std::sort(out.begin(), out.end());
  }

  bool collides(const Vec& l) const {
    if (!interacting()) return false;
    for (std::size_t i = 0; i + 1 < n_; ++i)
      if (l[i + 1] - l[i] < tol_ * (1.0 + l[i + 1])) return true;
    return false;
  }

  std::size_t n_;
  double drive_, coupling_, gamma_, noise_, taming_, tol_;
  int max_depth_;
  const CounterRng& rng_;
  Vec drift_;
};

std::vector<double> record_grid(double T, double every) {
  std::vector<double> grid;
  if (every > 0.0) {
    for (std::size_t k = 1;; ++k) {
      double t = static_cast<double>(k) * every;
      if (t >= T * (1.0 - 1e-12)) break;
      grid.push_back(t);
    }
  }
  grid.push_back(T);
  return grid;
}

Vec sorted_eigenvalues(const Eigen::MatrixXd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver_failed", "symmetric eigensolver did not converge");
  Vec ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  for (double& x : ev) x = std::max(x, 0.0);
  std::sort(ev.begin(), ev.end());
  return ev;
}

Vec sorted_eigenvalues(const Eigen::MatrixXcd& gram) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver_failed", "Hermitian eigensolver did not converge");
  Vec ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  for (double& x : ev) x = std::max(x, 0.0);
  std::sort(ev.begin(), ev.end());
  return ev;
}

// Row r of an n x m Gaussian draw at address (a, 2r + part).
void gaussian_matrix(Eigen::MatrixXd& g, const CounterRng& rng, std::uint64_t a, std::uint32_t part, double sd) {
  Vec row(static_cast<std::size_t>(g.cols()));
  for (Eigen::Index r = 0; r < g.rows(); ++r) {
    rng.fill_normals(row, a, static_cast<std::uint32_t>(2 * r) + part);
    for (Eigen::Index c = 0; c < g.cols(); ++c) g(r, c) = sd * row[static_cast<std::size_t>(c)];
  }
}

}  // namespace

Eigen::MatrixXd gaussian_matrix(int rows, int cols, double sd, const CounterRng& rng, std::uint64_t address,
                                std::uint32_t part) {
  Eigen::MatrixXd g(rows, cols);
  gaussian_matrix(g, rng, address, part, sd);
  return g;
}

std::vector<double> gram_eigenvalues(const Eigen::MatrixXd& M) {
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(M.rows(), M.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(M, 1.0 / static_cast<double>(M.cols()));
  return sorted_eigenvalues(Eigen::MatrixXd(gram.selfadjointView<Eigen::Lower>()));
}

std::vector<double> gram_eigenvalues(const Eigen::MatrixXcd& M) {
  Eigen::MatrixXcd gram = Eigen::MatrixXcd::Zero(M.rows(), M.rows());
  gram.selfadjointView<Eigen::Lower>().rankUpdate(M, 1.0 / static_cast<double>(M.cols()));
  return sorted_eigenvalues(Eigen::MatrixXcd(gram.selfadjointView<Eigen::Lower>()));
}

double default_dt(const WishartParams& w) {
  double drive = w.effective_beta1() * w.kappa * w.kappa;
  return 1e-3 * (drive > 1.0 ? 1.0 / drive : 1.0);
}

std::vector<double> jitter_degenerate(std::vector<double> values, double width) {
  std::sort(values.begin(), values.end());
  std::size_t i = 0;
  while (i < values.size()) {
    std::size_t j = i + 1;
    while (j < values.size() && std::abs(values[j] - values[i]) <= 1e-12 * std::max(std::abs(values[i]), std::abs(values[j])))
      ++j;
    std::size_t k = j - i;
    if (k > 1)
      for (std::size_t q = 0; q < k; ++q)
        values[i + q] = values[i] + width * static_cast<double>(q) / static_cast<double>(k - 1);
    i = j;
  }
  std::sort(values.begin(), values.end());
  return values;
}

EigenPath simulate_eigen(const WishartParams& w, std::vector<double> init, const SchemeOptions& opt,
                         std::uint64_t seed, std::uint64_t stream) {
  w.require_well_posed();
  const std::size_t n = static_cast<std::size_t>(w.n);
  if (init.size() != n)
    throw DomainError("invalid_initial_condition", fmt::format("need {} initial eigenvalues, got {}", n, init.size()));
  for (double x : init)
    if (!(x >= 0.0) || !std::isfinite(x))
      throw DomainError("invalid_initial_condition", fmt::format("initial eigenvalues must be finite and >= 0, got {}", x));
  const double dt = opt.dt > 0.0 ? opt.dt : default_dt(w);
  if (!(opt.T > 0.0) || !std::isfinite(opt.T)) throw DomainError("invalid_parameters", "T must be positive");
  if (!(opt.taming > 0.0 && opt.taming < 1.0) || !(opt.tamed_fraction >= 0.0))
    throw DomainError("invalid_parameters", "taming must lie in (0,1) and tamed_fraction must be >= 0");

  const CounterRng rng(seed, stream);
  Stepper stepper(w, opt, rng);

  std::sort(init.begin(), init.end());
  if (stepper.interacting()) {
    bool distinct = std::adjacent_find(init.begin(), init.end()) == init.end();
    if (!distinct) {
      if (!opt.jitter)
        throw DomainError("degenerate_initial_condition", "initial eigenvalues coincide; enable jitter");
      init = jitter_degenerate(std::move(init), opt.jitter_width);
    }
  }

  EigenPath path;
  path.seed = seed;
  path.stream = stream;
  path.scheme = fmt::format("exp-euler pair-tamed c={} frac={} dt_max={} bridge-halving={}", opt.taming,
                            opt.tamed_fraction, dt, opt.max_halvings);
  path.min_substep = dt;
  path.times.push_back(0.0);
  path.states.push_back(init);

  const std::size_t allowed = static_cast<std::size_t>(opt.tamed_fraction * static_cast<double>(n > 1 ? n - 1 : 0));
  const double h_floor = dt * 1e-18;
  Vec l = std::move(init), dW(n);
  double t = 0.0, h_prev = dt;
  std::uint64_t event = 0;
  for (double target : record_grid(opt.T, opt.record_every)) {
    while (t < target) {
      double h = std::min(dt, 2.0 * h_prev);
      bool land = false;
      if (t + h >= target - 1e-13 * std::max(1.0, target)) {
        h = target - t;
        land = true;
      }
      while (stepper.tamed_adjacent(l, h) > allowed) {
        h *= 0.5;
        land = false;
        if (h < h_floor)
          throw NumericalError("step_underflow", fmt::format("substep fell below {:.3g} at t = {:.17g}", h_floor, t));
      }
      rng.fill_normals(dW, event, 0);
      const double sd = std::sqrt(h);
      for (double& x : dW) x *= sd;
      stepper.advance(l, h, dW, event, 1, 0);
      t = land ? target : t + h;
      if (!land) h_prev = h;
      path.min_substep = std::min(path.min_substep, h);
      ++event;
    }
    path.times.push_back(target);
    path.states.push_back(l);
  }
  path.substeps = event;
  path.bridge_refinements = stepper.refinements;
  return path;
}

EigenPath simulate_matrix_oracle(const WishartParams& w, std::span<const double> init,
                                 std::span<const double> obs_times, std::uint64_t seed, std::uint64_t stream) {
  w.validate();
  const double b1 = w.effective_beta1();
  if (w.beta2 != 1.0 || (b1 != 1.0 && b1 != 2.0))
    throw DomainError("oracle_unsupported", "the matrix oracle covers beta2 = 1 with effective beta1 in {1, 2}");
  const bool complex_entries = b1 == 2.0;
  const Eigen::Index n = w.n, m = w.m;
  if (static_cast<Eigen::Index>(init.size()) != n)
    throw DomainError("invalid_initial_condition", fmt::format("need {} initial eigenvalues, got {}", n, init.size()));
  for (std::size_t k = 0; k < obs_times.size(); ++k)
    if (!(obs_times[k] >= 0.0) || (k > 0 && !(obs_times[k] > obs_times[k - 1])))
      throw DomainError("invalid_parameters", "observation times must be >= 0 and strictly increasing");

  const CounterRng rng(seed, stream);
  Eigen::MatrixXd re = Eigen::MatrixXd::Zero(n, m), im = Eigen::MatrixXd::Zero(n, m), g(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(init[static_cast<std::size_t>(i)] >= 0.0))
      throw DomainError("invalid_initial_condition", "initial eigenvalues must be >= 0");
    re(i, i) = std::sqrt(static_cast<double>(m) * init[static_cast<std::size_t>(i)]);
  }

  EigenPath path;
  path.seed = seed;
  path.stream = stream;
  path.scheme = complex_entries ? "exact-ou complex" : "exact-ou real";
  double t = 0.0;
  for (std::size_t k = 0; k < obs_times.size(); ++k) {
    double delta = obs_times[k] - t;
    if (delta > 0.0) {
      double decay = std::exp(-w.gamma * delta);
      double var = w.gamma == 0.0 ? w.kappa * w.kappa * delta
                                  : -w.kappa * w.kappa * std::expm1(-2.0 * w.gamma * delta) / (2.0 * w.gamma);
      double sd = std::sqrt(var);
      gaussian_matrix(g, rng, k, 0, sd);
      re = decay * re + g;
      if (complex_entries) {
        gaussian_matrix(g, rng, k, 1, sd);
        im = decay * im + g;
      }
      t = obs_times[k];
    }
    Vec ev;
    if (complex_entries) {
      Eigen::MatrixXcd M(n, m);
      M.real() = re;
      M.imag() = im;
      ev = gram_eigenvalues(M);
    } else {
      ev = gram_eigenvalues(re);
    }
    path.times.push_back(obs_times[k]);
    path.states.push_back(std::move(ev));
  }
  path.substeps = obs_times.size();
  return path;
}

std::vector<double> sample_stationary(int n, int m, double sigma_inf, Field field, std::uint64_t seed,
                                      std::uint64_t stream) {
  if (n < 1 || m < n) throw DomainError("invalid_parameters", fmt::format("need 1 <= n <= m, got n={} m={}", n, m));
  if (!(sigma_inf > 0.0)) throw DomainError("invalid_parameters", "sigma_inf must be positive");
  const CounterRng rng(seed, stream);
  if (field == Field::real) return gram_eigenvalues(gaussian_matrix(n, m, sigma_inf, rng, 0, 0));
  const double sd = sigma_inf / std::sqrt(2.0);
  Eigen::MatrixXcd M(n, m);
  M.real() = gaussian_matrix(n, m, sd, rng, 0, 0);
  M.imag() = gaussian_matrix(n, m, sd, rng, 0, 1);
  return gram_eigenvalues(M);
}

}  // namespace rectflow
