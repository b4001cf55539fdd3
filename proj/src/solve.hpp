#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace mfk::detail {

// Real roots of z^3 + p z + q = 0 in increasing order.
inline std::vector<double> depressed_cubic_roots(double p, double q) {
  if (p > 0.0) {
    const double r = std::sqrt(p / 3.0);
    return {-2.0 * r * std::sinh(std::asinh(1.5 * q / (p * r)) / 3.0)};
  }
  if (p == 0.0) return {std::cbrt(-q)};
  const double r = std::sqrt(-p / 3.0);
  const double disc = 1.5 * q / (p * r);  // cos(3 theta) argument
  if (std::abs(disc) <= 1.0) {
    const double theta = std::acos(disc) / 3.0;
    std::vector<double> roots;
    for (int k = 0; k < 3; ++k) roots.push_back(2.0 * r * std::cos(theta - 2.0 * std::numbers::pi * k / 3.0));
    std::sort(roots.begin(), roots.end());
    return roots;
  }
  // One real root.
  const double s = disc > 0.0 ? 1.0 : -1.0;
  return {2.0 * s * r * std::cosh(std::acosh(std::abs(disc)) / 3.0)};
}

// The unique real root for p > 0 (or the largest-magnitude one otherwise).
inline double depressed_cubic_root(double p, double q) {
  auto roots = depressed_cubic_roots(p, q);
  double best = roots.front();
  for (double r : roots)
    if (std::abs(r) > std::abs(best)) best = r;
  return best;
}

}  // namespace mfk::detail
