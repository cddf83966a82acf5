#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rectflow/moment_vector.hpp"

namespace rectflow {

// Weighted atoms on the real line, sorted, merged, normalized.
class DiscreteMeasure {
 public:
  DiscreteMeasure() = default;
  // Atoms in any order. Atoms closer than 1e-12 relative distance are merged.
  DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights);

  static DiscreteMeasure dirac(double x);
  // Uniform weights 1/n; the empirical measure of a sample.
  static DiscreteMeasure empirical(std::vector<double> sample);

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }

  // Right-continuous CDF and its left limit.
  double cdf(double x) const;
  double cdf_left(double x) const;
  bool on_half_line() const { return atoms_.empty() || atoms_.front() >= 0.0; }

  friend bool operator==(const DiscreteMeasure&, const DiscreteMeasure&) = default;

 private:
  std::vector<double> atoms_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

class SymmetricMeasure {
 public:
  // Throws DomainError("asymmetric_measure") unless mu is symmetric within tol.
  explicit SymmetricMeasure(DiscreteMeasure mu, double tol = 1e-12);
  const DiscreteMeasure& measure() const { return mu_; }

 private:
  DiscreteMeasure mu_;
};

SymmetricMeasure sym(const DiscreteMeasure& mu);
DiscreteMeasure sym_inv(const SymmetricMeasure& mu);

struct PushMap {
  enum class Kind { sqrt, square, scale };
  Kind kind;
  double factor = 1.0;
  static PushMap sqrt() { return {Kind::sqrt, 1.0}; }
  static PushMap square() { return {Kind::square, 1.0}; }
  static PushMap scale(double c) { return {Kind::scale, c}; }
};

DiscreteMeasure pushforward(const DiscreteMeasure& mu, PushMap map);

// Raw moments m^1..m^K (no half-line requirement; odd moments may be negative).
MomentVector moments(const DiscreteMeasure& mu, std::size_t K);
// Moments of the squared pushforward: m^k(mu^2) = m^{2k}(mu).
MomentVector squared_moments(const SymmetricMeasure& mu, std::size_t K);

using Cdf = std::function<double(double)>;

double ks_distance(const DiscreteMeasure& a, const DiscreteMeasure& b);
double ks_distance(const DiscreteMeasure& a, const Cdf& b);
double ks_distance(const Cdf& a, const DiscreteMeasure& b);

// Integral of |F_a - F_b|; diagnostics only.
double wasserstein1(const DiscreteMeasure& a, const DiscreteMeasure& b);

std::string to_csv(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_csv(const std::string& text);
std::string to_json(const DiscreteMeasure& mu);
DiscreteMeasure measure_from_json(const std::string& text);

DiscreteMeasure read_measure_file(const std::string& path);
void write_measure_file(const std::string& path, const DiscreteMeasure& mu);

}  // namespace rectflow
