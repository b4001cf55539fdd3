#include "mfk/laplace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "log_window.hpp"
#include "mfk/error.hpp"
#include "mfk/quadrature.hpp"
#include "solve.hpp"

namespace mfk {

double ScaledValue::value() const { return mantissa * std::exp(log_scale); }

double LaplaceProblem::U(double z, int order) const {
  double v = potential.effective(z, order, J);
  if (order == 0) return v - tilt * z;
  if (order == 1) return v - tilt;
  return v;
}

namespace {

constexpr double kDrop = 60.0;

auto log_density(const LaplaceProblem& p) {
  return [&p](double z) {
    return std::array<double, 3>{-(p.U(z, 0) - p.u_min) / p.eps, -p.U(z, 1) / p.eps, -p.U(z, 2) / p.eps};
  };
}

detail::LogWindow oracle_window(const LaplaceProblem& p) {
  const GrowthBound g = p.potential.growth(p.J);
  auto f = log_density(p);
  const double reach = detail::tail_reach(p.tilt / p.eps, p.eps, g.alpha, g.radius, f(0.0)[0], kDrop) +
                       std::abs(p.minimizer);
  return detail::log_window(f, reach, kDrop);
}

void check_formula(const LaplaceProblem& p, int k) {
  if (k < 0 || k > 4) throw Error(ErrorCode::InvalidArgument, "Laplace moment index k must be in 0..4");
  if (!(p.u2 > 1e-8))
    throw Error(ErrorCode::DegenerateMinimum, "U''(z_m) = " + std::to_string(p.u2) + " is not positive");
}

}  // namespace

LaplaceProblem LaplaceProblem::make(const PotentialSpec& potential, double J, double tilt, double eps) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  LaplaceProblem p;
  p.potential = potential;
  p.J = J;
  p.tilt = tilt;
  p.eps = eps;

  double z;
  if (potential.is_quartic() && J > 1.0) {
    z = detail::depressed_cubic_root(J - 1.0, -tilt);
  } else {
    const GrowthBound g = potential.growth(J);
    p.u_min = potential.effective(0.0, 0, J);
    auto f = log_density(p);
    z = detail::log_window(f, detail::tail_reach(tilt / eps, eps, g.alpha, g.radius, f(0.0)[0], kDrop), kDrop).mode;
  }
  for (int it = 0; it < 50; ++it) {
    const double d1 = p.U(z, 1), d2 = p.U(z, 2);
    if (!(d2 > 0.0)) break;
    const double step = d1 / d2;
    z -= step;
    if (std::abs(step) <= 1e-16 * (1.0 + std::abs(z))) break;
  }
  p.minimizer = z;
  p.u_min = p.U(z, 0);
  p.u2 = p.U(z, 2);
  p.u3 = p.U(z, 3);
  if (std::abs(p.U(z, 1)) > 1e-10 * std::max(1.0, std::abs(tilt)))
    throw Error(ErrorCode::SolverFailure, "minimizer not resolved: |U'| = " + std::to_string(std::abs(p.U(z, 1))));
  return p;
}

double double_factorial(int n) {
  if (n < -1 || n > 20) throw Error(ErrorCode::InvalidArgument, "double factorial argument outside -1..20");
  double r = 1.0;
  for (int i = n; i > 1; i -= 2) r *= i;
  return r;
}

ScaledValue laplace_moment_scaled(const LaplaceProblem& p, int k, Parity parity) {
  check_formula(p, k);
  const double root2pi = std::sqrt(2.0 * std::numbers::pi);
  ScaledValue v;
  v.log_scale = -p.u_min / p.eps;
  if (parity == Parity::Even) {
    v.mantissa = root2pi * double_factorial(2 * k - 1) * std::pow(p.eps, k + 0.5) / std::pow(p.u2, k + 0.5);
  } else {
    v.mantissa = -root2pi * double_factorial(2 * k + 3) * p.u3 * std::pow(p.eps, k + 1.5) /
                 (6.0 * std::pow(p.u2, k + 2.5));
  }
  return v;
}

double laplace_moment(const LaplaceProblem& p, int k, Parity parity) {
  return laplace_moment_scaled(p, k, parity).value();
}

ScaledValue quad_oracle_scaled(const LaplaceProblem& p, int power, Center center, double rel_tol) {
  if (power < 0 || power > 12) throw Error(ErrorCode::InvalidArgument, "oracle power outside 0..12");
  const auto w = oracle_window(p);
  auto f = log_density(p);
  // Shift by U(z_m) so the integrand peaks at 1.
  double c = p.minimizer;
  if (center == Center::TiltedMean) {
    auto first = [&](double z) {
      double e = std::exp(f(z)[0]);
      return std::array<double, 2>{e, e * (z - p.minimizer)};
    };
    auto r = quad::integrate<2>(first, w.breaks, {rel_tol, 0.0, 4000});
    c = p.minimizer + r.value[1] / r.value[0];
  }
  std::vector<double> breaks = w.breaks;
  if (c > w.lo && c < w.hi) breaks.push_back(c);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  auto integrand = [&](double z) {
    double e = std::exp(f(z)[0]);
    const double d = z - c;
    for (int i = 0; i < power; ++i) e *= d;
    return std::array<double, 1>{e};
  };
  auto r = quad::integrate<1>(integrand, breaks, {rel_tol, 0.0, 4000});
  return {r.value[0], -p.u_min / p.eps};
}

double quad_oracle(const LaplaceProblem& p, int power, Center center, double rel_tol) {
  return quad_oracle_scaled(p, power, center, rel_tol).value();
}

double moment_ratio(const LaplaceProblem& p, int k, Parity parity, Center center) {
  check_formula(p, k);
  if (parity == Parity::Even) return std::pow(p.eps, k) * double_factorial(2 * k - 1) / std::pow(p.u2, k);
  const double common = p.u3 * std::pow(p.eps, k + 1) / (6.0 * std::pow(p.u2, k + 2));
  if (center == Center::Minimizer) return -double_factorial(2 * k + 3) * common;
  return -2.0 * k * double_factorial(2 * k + 1) * common;
}

}  // namespace mfk
