#pragma once

// arctan(a/b) on points of an annulus. Single step, real-valued, and the
// input space is infinite, so a finite fit cannot cover it.

#include <cmath>
#include <numbers>
#include <random>

#include "lengthgen/core.hpp"
#include "lengthgen/metrics.hpp"
#include "lengthgen/tasks/common.hpp"

namespace lengthgen {

struct ArctanSample {
  RealPoint x;  // (a, b)
  double target = 0.0;
};

inline constexpr double kArctanTolerance = 0.01;

/// Uniform in radius and angle; points with |b| < 1e-3 * r_hi are redrawn.
inline ArctanSample arctan_sample(double r_lo, double r_hi, Rng& rng) {
  if (!(0.0 < r_lo && r_lo < r_hi)) throw std::invalid_argument("annulus needs 0 < lo < hi");
  std::uniform_real_distribution<double> radius(r_lo, r_hi);
  std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
  for (;;) {
    const double r = radius(rng);
    if (r <= r_lo) continue;
    const double t = angle(rng);
    const double a = r * std::sin(t), b = r * std::cos(t);
    if (std::abs(b) < 1e-3 * r_hi) continue;
    return {{a, b}, std::atan(a / b)};
  }
}

inline ArctanSample arctan_sample(const SampleRange& r, Rng& rng) {
  return arctan_sample(r.lo, r.hi, rng);
}

inline bool arctan_correct(double predicted, double target) {
  return std::abs(predicted - target) < kArctanTolerance;
}

}  // namespace lengthgen
