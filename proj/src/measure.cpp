#include "rectflow/measure.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "rectflow/errors.hpp"
#include "rectflow/numeric.hpp"

namespace rectflow {

namespace {

constexpr double kMergeRelTol = 1e-12;
constexpr double kRenormTol = 1e-9;

bool close_atoms(double a, double b) {
  return std::abs(a - b) <= kMergeRelTol * std::max(std::abs(a), std::abs(b));
}

}  // namespace

MomentVector::MomentVector(std::vector<double> entries) : m_(std::move(entries)) {}

double MomentVector::operator()(std::size_t k) const {
  if (k == 0) return 1.0;
  if (k > m_.size()) throw DomainError("moment_order", fmt::format("moment {} requested from a vector of order {}", k, m_.size()));
  return m_[k - 1];
}

HankelReport MomentVector::hankel_check(double tol) const {
  HankelReport r;
  const auto& m = *this;
  auto check = [&](double det, double scale) {
    r.minors.push_back(det);
    if (det < -tol * std::max(1.0, scale)) r.plausible = false;
  };
  for (double v : m_)
    if (v < -tol * std::max(1.0, std::abs(v))) r.plausible = false;
  if (order() >= 2) check(m(2) - m(1) * m(1), m(2));
  if (order() >= 3) check(m(1) * m(3) - m(2) * m(2), m(1) * m(3));
  if (order() >= 4) {
    double d = m(2) * m(4) - m(3) * m(3);
    d -= m(1) * (m(1) * m(4) - m(3) * m(2));
    d += m(2) * (m(1) * m(3) - m(2) * m(2));
    check(d, m(2) * m(4));
  }
  return r;
}

DiscreteMeasure::DiscreteMeasure(std::vector<double> atoms, std::vector<double> weights) {
  if (atoms.size() != weights.size())
    throw DomainError("invalid_measure", "atoms and weights differ in length");
  if (atoms.empty()) throw DomainError("invalid_measure", "empty measure");
  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!std::isfinite(atoms[i])) throw DomainError("invalid_measure", "non-finite atom");
    if (!std::isfinite(weights[i]) || weights[i] < 0.0)
      throw DomainError("invalid_measure", fmt::format("invalid weight {}", weights[i]));
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

  for (std::size_t idx : order) {
    if (weights[idx] == 0.0) continue;
    double x = atoms[idx] + 0.0;  // folds -0.0
    if (!atoms_.empty() && close_atoms(atoms_.back(), x)) {
      weights_.back() += weights[idx];
    } else {
      atoms_.push_back(x);
      weights_.push_back(weights[idx]);
    }
  }
  if (atoms_.empty()) throw DomainError("invalid_measure", "all weights are zero");

  double total = neumaier_sum(weights_);
  double noise = 64.0 * static_cast<double>(weights_.size()) * std::numeric_limits<double>::epsilon();
  if (std::abs(total - 1.0) > kRenormTol)
    throw DomainError("invalid_measure", fmt::format("weights sum to {:.17g}", total));
  if (std::abs(total - 1.0) > noise)
    for (double& w : weights_) w /= total;

  cumulative_.resize(weights_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) cumulative_[i] = (acc += weights_[i]);
  cumulative_.back() = 1.0;
}

DiscreteMeasure DiscreteMeasure::dirac(double x) { return DiscreteMeasure({x}, {1.0}); }

DiscreteMeasure DiscreteMeasure::empirical(std::vector<double> sample) {
  std::vector<double> w(sample.size(), sample.empty() ? 0.0 : 1.0 / static_cast<double>(sample.size()));
  return DiscreteMeasure(std::move(sample), std::move(w));
}

double DiscreteMeasure::cdf(double x) const {
  auto it = std::upper_bound(atoms_.begin(), atoms_.end(), x);
  if (it == atoms_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
}

double DiscreteMeasure::cdf_left(double x) const {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x);
  if (it == atoms_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - atoms_.begin()) - 1];
}

SymmetricMeasure::SymmetricMeasure(DiscreteMeasure mu, double tol) : mu_(std::move(mu)) {
  const auto& a = mu_.atoms();
  const auto& w = mu_.weights();
  std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t j = n - 1 - i;
    if (std::abs(a[i] + a[j]) > tol * std::max(1.0, std::abs(a[i])) || std::abs(w[i] - w[j]) > tol)
      throw DomainError("asymmetric_measure", fmt::format("atom {:.17g} has no mirror image", a[i]));
  }
}

SymmetricMeasure sym(const DiscreteMeasure& mu) {
  std::vector<double> atoms, weights;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double x = mu.atoms()[i], w = mu.weights()[i];
    if (x < 0.0) throw DomainError("negative_atom", fmt::format("sym needs a measure on [0,inf), got atom {:.17g}", x));
    if (x == 0.0) {
      atoms.push_back(0.0);
      weights.push_back(w);
    } else {
      atoms.insert(atoms.end(), {-x, x});
      weights.insert(weights.end(), {0.5 * w, 0.5 * w});
    }
  }
  return SymmetricMeasure(DiscreteMeasure(std::move(atoms), std::move(weights)));
}

DiscreteMeasure sym_inv(const SymmetricMeasure& mu) {
  std::vector<double> atoms, weights;
  const auto& m = mu.measure();
  for (std::size_t i = 0; i < m.size(); ++i) {
    double x = m.atoms()[i], w = m.weights()[i];
    if (x < 0.0) continue;
    atoms.push_back(x);
    weights.push_back(x == 0.0 ? w : 2.0 * w);
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

DiscreteMeasure pushforward(const DiscreteMeasure& mu, PushMap map) {
  std::vector<double> atoms = mu.atoms();
  for (double& x : atoms) {
    switch (map.kind) {
      case PushMap::Kind::sqrt:
        if (x < 0.0) throw DomainError("negative_atom", fmt::format("sqrt of negative atom {:.17g}", x));
        x = std::sqrt(x) + 0.0;
        break;
      case PushMap::Kind::square:
        x = x * x;
        break;
      case PushMap::Kind::scale:
        x = map.factor * x;
        break;
    }
  }
  return DiscreteMeasure(std::move(atoms), mu.weights());
}

MomentVector moments(const DiscreteMeasure& mu, std::size_t K) {
  if (K == 0) throw DomainError("moment_order", "K must be at least 1");
  std::size_t n = mu.size();
  std::vector<double> power(n, 1.0), terms(n), out(K);
  for (std::size_t k = 1; k <= K; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      power[i] *= mu.atoms()[i];
      terms[i] = mu.weights()[i] * power[i];
    }
    std::stable_sort(terms.begin(), terms.end(), [](double a, double b) { return std::abs(a) > std::abs(b); });
    out[k - 1] = neumaier_sum(terms);
  }
  return MomentVector(std::move(out));
}

MomentVector squared_moments(const SymmetricMeasure& mu, std::size_t K) {
  return moments(pushforward(mu.measure(), PushMap::square()), K);
}

double ks_distance(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  // Both CDFs are step functions; the sup is attained at an atom of either, from the right.
  std::size_t i = 0, j = 0;
  double fa = 0.0, fb = 0.0, d = 0.0;
  const auto& xa = a.atoms();
  const auto& xb = b.atoms();
  while (i < xa.size() || j < xb.size()) {
    double x = std::min(i < xa.size() ? xa[i] : INFINITY, j < xb.size() ? xb[j] : INFINITY);
    while (i < xa.size() && xa[i] == x) fa = a.cdf(xa[i++]);
    while (j < xb.size() && xb[j] == x) fb = b.cdf(xb[j++]);
    d = std::max(d, std::abs(fa - fb));
  }
  return std::min(d, 1.0);
}

double ks_distance(const DiscreteMeasure& a, const Cdf& b) {
  double d = 0.0;
  for (double x : a.atoms()) {
    double f = b(x);
    d = std::max({d, std::abs(a.cdf(x) - f), std::abs(a.cdf_left(x) - f)});
  }
  return std::min(d, 1.0);
}

double ks_distance(const Cdf& a, const DiscreteMeasure& b) { return ks_distance(b, a); }

double wasserstein1(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  std::vector<double> pts = a.atoms();
  pts.insert(pts.end(), b.atoms().begin(), b.atoms().end());
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  std::vector<double> pieces;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k)
    pieces.push_back(std::abs(a.cdf(pts[k]) - b.cdf(pts[k])) * (pts[k + 1] - pts[k]));
  return neumaier_sum(pieces);
}

std::string to_csv(const DiscreteMeasure& mu) {
  std::string out = "atom,weight\n";
  for (std::size_t i = 0; i < mu.size(); ++i) out += fmt::format("{:.17g},{:.17g}\n", mu.atoms()[i], mu.weights()[i]);
  return out;
}

DiscreteMeasure measure_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::vector<double> atoms, weights;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line != "atom,weight")
        throw DomainError("malformed_measure_file", fmt::format("expected header 'atom,weight', got '{}'", line));
      header = true;
      continue;
    }
    auto comma = line.find(',');
    if (comma == std::string::npos)
      throw DomainError("malformed_measure_file", fmt::format("line {}: expected 'atom,weight'", lineno));
    atoms.push_back(parse_double(line.substr(0, comma), "atom"));
    weights.push_back(parse_double(line.substr(comma + 1), "weight"));
  }
  if (!header) throw DomainError("malformed_measure_file", "missing header");
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

std::string to_json(const DiscreteMeasure& mu) {
  nlohmann::json arr = nlohmann::json::array();
  for (std::size_t i = 0; i < mu.size(); ++i) arr.push_back({mu.atoms()[i], mu.weights()[i]});
  return arr.dump();
}

DiscreteMeasure measure_from_json(const std::string& text) {
  nlohmann::json arr;
  try {
    arr = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError("malformed_measure_file", e.what());
  }
  if (!arr.is_array()) throw DomainError("malformed_measure_file", "expected a JSON array of [atom, weight] pairs");
  std::vector<double> atoms, weights;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw DomainError("malformed_measure_file", "expected [atom, weight] pairs");
    atoms.push_back(p[0].get<double>());
    weights.push_back(p[1].get<double>());
  }
  return DiscreteMeasure(std::move(atoms), std::move(weights));
}

DiscreteMeasure read_measure_file(const std::string& path) {
  std::string text = read_text_file(path);
  bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  return json ? measure_from_json(text) : measure_from_csv(text);
}

void write_measure_file(const std::string& path, const DiscreteMeasure& mu) {
  bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  write_text_file(path, json ? to_json(mu) + "\n" : to_csv(mu));
}

}  // namespace rectflow
