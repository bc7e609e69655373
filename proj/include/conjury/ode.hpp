#pragma once

// Adaptive Dormand-Prince 5(4) integration over a fixed time interval.

#include <algorithm>
#include <cmath>
#include <string>

#include "conjury/codes.hpp"

namespace conjury::ode {

struct Options {
  double tol = 1e-10;        // mixed absolute/relative local error target
  double min_step = 1e-14;   // step-size underflow guard
  int max_steps = 200000;
};

/// Integrates y' = f(y) from t = 0 to t = t_end. State must support +, -,
/// scalar *, and a norm via `norm_of`.
template <class State, class Field, class Norm>
State integrate(Field&& f, State y, double t_end, const Options& opt, Norm&& norm_of) {
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  if (t_end == 0.0) return y;
  const double dir = t_end > 0 ? 1.0 : -1.0;
  const double span = std::abs(t_end);
  double t = 0.0;
  double h = std::min(0.1, span);
  State k1 = f(y);
  for (int step = 0; step < opt.max_steps; ++step) {
    if (t >= span) return y;
    if (t + h > span) h = span - t;
    const double hs = h * dir;
    State k2 = f(y + hs * (a21 * k1));
    State k3 = f(y + hs * (a31 * k1 + a32 * k2));
    State k4 = f(y + hs * (a41 * k1 + a42 * k2 + a43 * k3));
    State k5 = f(y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    State k6 = f(y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    State y5 = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    State k7 = f(y5);
    State err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double scale = opt.tol * (1.0 + std::max(norm_of(y), norm_of(y5)));
    const double ratio = norm_of(err) / scale;
    if (ratio <= 1.0) {
      t += h;
      y = y5;
      k1 = k7;
    }
    const double factor = ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
    h *= factor;
    if (h < opt.min_step && t < span) throw ConstructionError("ode: step size underflow");
  }
  throw ConstructionError("ode: step budget exhausted");
}

inline double abs_norm(double v) { return std::abs(v); }

}  // namespace conjury::ode
