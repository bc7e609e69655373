#pragma once

// Smooth cutoff profiles shared by the planar and 5-space constructions.

#include <cmath>

namespace conjury::smooth {

/// Standard mollifier kernel exp(-1 / ((x-a)(b-x))) on (a, b), zero elsewhere.
double mollifier(double x, double a, double b);

/// C-infinity non-increasing plateau: 1 on [0, 1/4], 0 on [3/4, 1], given on
/// the transition by the normalized tail integral of the mollifier kernel.
/// All derivatives vanish at 1/4 and 3/4.
double plateau(double x);

/// C-infinity non-decreasing step from 0 (y <= 0) to 1 (y >= 1), infinitely
/// flat at both ends. Cheaper than plateau(); used for blending weights.
inline double flat_step(double y) {
  if (y <= 0.0) return 0.0;
  if (y >= 1.0) return 1.0;
  const double f0 = std::exp(-1.0 / y);
  const double f1 = std::exp(-1.0 / (1.0 - y));
  return f0 / (f0 + f1);
}

/// 1 for s <= lo, 0 for s >= hi, flat_step in between.
inline double cutoff(double s, double lo, double hi) {
  if (s <= lo) return 1.0;
  if (s >= hi) return 0.0;
  return 1.0 - flat_step((s - lo) / (hi - lo));
}

/// Positive on [0, 1), equal to 1 at 0, flat zero at 1: exp(-s^2 / (1 - s^2)).
inline double open_bump(double s) {
  const double a = std::abs(s);
  if (a >= 1.0) return 0.0;
  const double s2 = a * a;
  return std::exp(-s2 / (1.0 - s2));
}

}  // namespace conjury::smooth
