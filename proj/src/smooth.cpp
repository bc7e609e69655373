#include "conjury/smooth.hpp"

#include <array>

namespace conjury::smooth {
namespace {

// 16-point Gauss-Legendre nodes/weights on [-1, 1].
constexpr std::array<double, 8> kNodes = {
    0.0950125098376374401853193, 0.2816035507792589132304605, 0.4580167776572273863424194,
    0.6178762444026437484466718, 0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
constexpr std::array<double, 8> kWeights = {
    0.1894506104550684962853967, 0.1826034150449235888667637, 0.1691565193950025381893121,
    0.1495959888165767320815017, 0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};

constexpr double kLo = 0.25;
constexpr double kHi = 0.75;
constexpr int kPanels = 24;

double integrate(double x0, double x1) {
  if (x1 <= x0) return 0.0;
  const double h = (x1 - x0) / kPanels;
  double total = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const double mid = x0 + (p + 0.5) * h;
    const double half = 0.5 * h;
    double panel = 0.0;
    for (std::size_t k = 0; k < kNodes.size(); ++k) {
      panel += kWeights[k] * (mollifier(mid - half * kNodes[k], kLo, kHi) +
                              mollifier(mid + half * kNodes[k], kLo, kHi));
    }
    total += panel * half;
  }
  return total;
}

}  // namespace

double mollifier(double x, double a, double b) {
  if (x <= a || x >= b) return 0.0;
  return std::exp(-1.0 / ((x - a) * (b - x)));
}

double plateau(double x) {
  if (x <= kLo) return 1.0;
  if (x >= kHi) return 0.0;
  static const double total = integrate(kLo, kHi);
  // Integrate the shorter side for accuracy near the ends.
  if (x <= 0.5) return 1.0 - integrate(kLo, x) / total;
  return integrate(x, kHi) / total;
}

}  // namespace conjury::smooth
