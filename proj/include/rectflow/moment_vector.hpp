#pragma once

#include <cstddef>
#include <vector>

namespace rectflow {

struct HankelReport {
  // det [[1,m1],[m1,m2]], det [[m1,m2],[m2,m3]], det of the 3x3 Hankel of m0..m4; only those the order allows.
  std::vector<double> minors;
  bool plausible = true;  // all minors >= -tol * scale
};

// Moments m^1..m^K of a measure on the half line. m^0 = 1 is implicit.
class MomentVector {
 public:
  MomentVector() = default;
  explicit MomentVector(std::vector<double> entries);

  std::size_t order() const { return m_.size(); }
  // k in [0, order()]; k = 0 gives 1.
  double operator()(std::size_t k) const;
  const std::vector<double>& entries() const { return m_; }

  HankelReport hankel_check(double tol = 1e-10) const;

 private:
  std::vector<double> m_;
};

}  // namespace rectflow
