#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace mixsimplex {

/// Composite Gauss-Legendre rule on an interval.
struct QuadratureConfig {
  std::size_t panels = 64;
  std::size_t nodes_per_panel = 16;
  /// Distance kept from each endpoint (the quantile transform is singular there).
  double endpoint_inset = 1e-12;

  static constexpr std::size_t kMinDensityNodes = 256;
};

struct GaussLegendre {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;

  explicit GaussLegendre(std::size_t n) : nodes(n), weights(n) {
    if (n == 0) throw std::invalid_argument("Gauss-Legendre rule needs at least one node");
    // Newton iteration on P_n starting from the Chebyshev-like guess.
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
          const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
          p0 = p1;
          p1 = pk;
        }
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      // Recompute derivative at the converged root for the weight.
      double p0 = 1.0;
      double p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = pk;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      nodes[i] = -x;
      nodes[n - 1 - i] = x;
      weights[i] = w;
      weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) nodes[n / 2] = 0.0;
  }
};

/// Integrates f over [a, b] with `panels` equal panels of an n-point rule.
template <class F>
double integrate_composite(F&& f, double a, double b, const GaussLegendre& rule, std::size_t panels) {
  const double h = (b - a) / static_cast<double>(panels);
  double total = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double lo = a + h * static_cast<double>(p);
    const double mid = lo + 0.5 * h;
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(mid + 0.5 * h * rule.nodes[i]);
    total += 0.5 * h * acc;
  }
  return total;
}

/// Integrates f over (inset, 1 - inset). Panel widths shrink geometrically
/// toward both endpoints, where integrands built on the normal quantile are
/// singular. Half the panels go to each side of 1/2.
template <class F>
double integrate_graded_unit(F&& f, double inset, const GaussLegendre& rule, std::size_t panels) {
  if (!(inset > 0.0 && inset < 0.5)) throw std::invalid_argument("graded quadrature: inset must be in (0, 0.5)");
  const std::size_t half = std::max<std::size_t>(1, panels / 2);
  const double ratio = std::log(0.5 / inset) / static_cast<double>(half);
  auto edge = [&](std::size_t i) { return inset * std::exp(ratio * static_cast<double>(i)); };
  double total = 0.0;
  for (std::size_t p = 0; p < half; ++p) {
    const double lo = edge(p);
    const double hi = p + 1 == half ? 0.5 : edge(p + 1);
    const double mid = 0.5 * (lo + hi);
    const double h = hi - lo;
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double off = 0.5 * h * rule.nodes[i];
      acc += rule.weights[i] * (f(mid + off) + f(1.0 - (mid + off)));
    }
    total += 0.5 * h * acc;
  }
  return total;
}

}  // namespace mixsimplex
