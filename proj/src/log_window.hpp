#pragma once

// Locating the bulk of densities e^{f(z)} before quadrature.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "mfk/error.hpp"

namespace mfk::detail {

struct LogWindow {
  double mode = 0.0;      // global maximizer of f
  double log_max = 0.0;   // f(mode)
  double lo = 0.0;        // f < log_max - drop outside [lo, hi]
  double hi = 0.0;
  std::vector<double> modes;   // all local maxima within `drop` of the global one
  std::vector<double> breaks;  // quadrature breakpoints spanning [lo, hi]
};

// Newton on f' inside [a, b] with bisection fallback; f returns {f, f', f''}.
template <class F>
double refine_max(F& f, double a, double b, double z) {
  auto fa = f(a)[1];
  auto fb = f(b)[1];
  if (!(fa > 0.0 && fb < 0.0)) return z;
  for (int it = 0; it < 200; ++it) {
    auto v = f(z);
    if (v[1] == 0.0) return z;
    if (v[1] > 0.0) {
      a = z;
    } else {
      b = z;
    }
    double next = (v[2] < 0.0) ? z - v[1] / v[2] : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - z) <= 1e-15 * (1.0 + std::abs(z)) || b - a <= 4e-16 * (1.0 + std::abs(z))) return next;
    z = next;
  }
  return z;
}

// f must be finite on [-reach, reach] and below log_max - drop outside it.
template <class F>
LogWindow log_window(F&& f, double reach, double drop, int scan_points = 2001) {
  if (!(reach > 0.0) || !std::isfinite(reach))
    throw Error(ErrorCode::QuadratureFailure, "invalid truncation radius");
  const double h = 2.0 * reach / (scan_points - 1);
  std::vector<double> zs(scan_points), fs(scan_points);
  int best = 0;
  for (int i = 0; i < scan_points; ++i) {
    zs[i] = -reach + h * i;
    fs[i] = f(zs[i])[0];
    if (!std::isfinite(fs[i]) && fs[i] != -std::numeric_limits<double>::infinity())
      throw Error(ErrorCode::Overflow, "log-density not finite at z=" + std::to_string(zs[i]));
    if (fs[i] > fs[best]) best = i;
  }
  std::vector<int> peaks;
  for (int i = 0; i < scan_points; ++i) {
    double left = i > 0 ? fs[i - 1] : -std::numeric_limits<double>::infinity();
    double right = i + 1 < scan_points ? fs[i + 1] : -std::numeric_limits<double>::infinity();
    if (fs[i] >= left && fs[i] > right && fs[i] > fs[best] - drop - 5.0) peaks.push_back(i);
  }
  LogWindow w;
  w.log_max = -std::numeric_limits<double>::infinity();
  for (int i : peaks) {
    double a = zs[std::max(0, i - 1)];
    double b = zs[std::min(scan_points - 1, i + 1)];
    double z = refine_max(f, a, b, zs[i]);
    double v = f(z)[0];
    w.modes.push_back(z);
    if (v > w.log_max) {
      w.log_max = v;
      w.mode = z;
    }
  }
  std::erase_if(w.modes, [&](double z) { return f(z)[0] < w.log_max - drop; });
  std::sort(w.modes.begin(), w.modes.end());

  const double threshold = w.log_max - drop;
  int first = 0;
  while (first < scan_points && fs[first] < threshold) ++first;
  int last = scan_points - 1;
  while (last >= 0 && fs[last] < threshold) --last;
  w.lo = zs[std::max(0, first - 1)];
  w.hi = zs[std::min(scan_points - 1, last + 1)];
  if (first == 0 || last == scan_points - 1)
    throw Error(ErrorCode::QuadratureFailure, "density mass reaches the truncation radius " + std::to_string(reach));

  w.breaks.push_back(w.lo);
  for (double m : w.modes) {
    auto v = f(m);
    double width = v[2] < 0.0 ? 1.0 / std::sqrt(-v[2]) : h;
    for (double off : {-4.0, -1.0, 0.0, 1.0, 4.0}) {
      double b = m + off * width;
      if (b > w.lo && b < w.hi) w.breaks.push_back(b);
    }
  }
  w.breaks.push_back(w.hi);
  std::sort(w.breaks.begin(), w.breaks.end());
  w.breaks.erase(std::unique(w.breaks.begin(), w.breaks.end()), w.breaks.end());
  return w;
}

// Radius outside which sigma z - U(z)/eps < f(0) - drop, given U(z) >= alpha z^2 beyond radius.
inline double tail_reach(double sigma, double eps, double alpha, double radius, double f0, double drop) {
  const double a = alpha / eps;
  const double s = std::abs(sigma);
  const double c = std::max(0.0, drop - f0) + drop;
  const double z = (s + std::sqrt(s * s + 4.0 * a * c)) / (2.0 * a);
  return std::max(radius, z) * 1.05 + 1e-3;
}

}  // namespace mfk::detail
