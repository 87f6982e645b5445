#pragma once

#include <cmath>

namespace framescope {

/// Neumaier-compensated accumulator. Reductions over atoms go through this
/// so results do not depend on summation order beyond ~1 ulp.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

inline double ipow(double x, int n) {
  double result = 1.0;
  double base = x;
  while (n > 0) {
    if (n & 1) result *= base;
    base *= base;
    n >>= 1;
  }
  return result;
}

/// r^p for a distance r >= 0, with 0^p = 0 below the underflow guard.
inline double distance_power(double r, double p) {
  if (r < 1e-300) return 0.0;
  if (p == 2.0) return r * r;
  if (p == 1.0) return r;
  return std::pow(r, p);
}

}  // namespace framescope
