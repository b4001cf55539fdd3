#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <span>
#include <string>
#include <vector>

#include "mfk/error.hpp"

namespace mfk::quad {

struct Options {
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  int max_intervals = 4000;
};

template <std::size_t K>
struct Result {
  std::array<double, K> value{};
  std::array<double, K> error{};
  int intervals = 0;
};

namespace detail {

// 21-point Gauss-Kronrod abscissae and weights; the Gauss points are the odd entries.
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208745959387, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

template <std::size_t K>
struct Piece {
  double a;
  double b;
  std::array<double, K> value;
  std::array<double, K> error;
  std::array<double, K> abs_value;
  double priority;
  bool operator<(const Piece& o) const { return priority < o.priority; }
};

template <std::size_t K, class F>
Piece<K> gk21(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  std::array<double, 21> x;
  for (int j = 0; j < 10; ++j) {
    x[2 * j] = c - h * kXgk[j];
    x[2 * j + 1] = c + h * kXgk[j];
  }
  x[20] = c;
  std::array<std::array<double, K>, 21> fx;
  for (int i = 0; i < 21; ++i) fx[i] = f(x[i]);

  Piece<K> p{a, b, {}, {}, {}, 0.0};
  for (std::size_t k = 0; k < K; ++k) {
    double kron = kWgk[10] * fx[20][k];
    double gauss = 0.0;
    double absk = kWgk[10] * std::abs(fx[20][k]);
    for (int j = 0; j < 10; ++j) {
      double s = fx[2 * j][k] + fx[2 * j + 1][k];
      kron += kWgk[j] * s;
      absk += kWgk[j] * (std::abs(fx[2 * j][k]) + std::abs(fx[2 * j + 1][k]));
      if (j % 2 == 1) gauss += kWg[j / 2] * s;
    }
    const double mean = 0.5 * kron;
    double asc = kWgk[10] * std::abs(fx[20][k] - mean);
    for (int j = 0; j < 10; ++j)
      asc += kWgk[j] * (std::abs(fx[2 * j][k] - mean) + std::abs(fx[2 * j + 1][k] - mean));
    kron *= h;
    gauss *= h;
    absk *= std::abs(h);
    asc *= std::abs(h);
    double err = std::abs(kron - gauss);
    if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
    const double eps50 = 50.0 * std::numeric_limits<double>::epsilon();
    if (absk > std::numeric_limits<double>::min() / eps50) err = std::max(eps50 * absk, err);
    p.value[k] = kron;
    p.error[k] = err;
    p.abs_value[k] = absk;
  }
  return p;
}

}  // namespace detail

// Globally adaptive 21-point Gauss-Kronrod integration of a vector-valued integrand
// over [breaks.front(), breaks.back()], initially split at every breakpoint.
// Component k converges when err_k <= max(abs_tol, rel_tol * integral of |f_k|).
template <std::size_t K, class F>
Result<K> integrate(F&& f, std::span<const double> breaks, const Options& opt = {}) {
  using Piece = detail::Piece<K>;
  if (breaks.size() < 2) throw Error(ErrorCode::InvalidArgument, "quadrature needs at least two breakpoints");
  std::vector<Piece> pieces;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (!(breaks[i + 1] > breaks[i])) continue;
    pieces.push_back(detail::gk21<K>(f, breaks[i], breaks[i + 1]));
  }
  Result<K> out;
  if (pieces.empty()) return out;

  std::array<double, K> total{}, total_err{}, total_abs{};
  for (const auto& p : pieces)
    for (std::size_t k = 0; k < K; ++k) {
      total[k] += p.value[k];
      total_err[k] += p.error[k];
      total_abs[k] += p.abs_value[k];
    }

  auto tolerance = [&](std::size_t k) { return std::max(opt.abs_tol, opt.rel_tol * total_abs[k]); };
  auto priority = [&](const Piece& p) {
    double worst = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      double tol = tolerance(k);
      double r = tol > 0.0 ? p.error[k] / tol : (p.error[k] > 0.0 ? 1e300 : 0.0);
      worst = std::max(worst, r);
    }
    return worst;
  };
  auto converged = [&] {
    for (std::size_t k = 0; k < K; ++k)
      if (!(total_err[k] <= tolerance(k))) return false;
    return true;
  };

  std::priority_queue<Piece> queue;
  std::vector<Piece> settled;
  for (auto& p : pieces) {
    p.priority = priority(p);
    queue.push(p);
  }
  int count = static_cast<int>(pieces.size());

  while (!converged()) {
    if (count >= opt.max_intervals) {
      bool finite = true;
      for (std::size_t k = 0; k < K; ++k) finite = finite && std::isfinite(total[k]);
      throw Error(ErrorCode::QuadratureFailure,
                  std::string("adaptive quadrature did not converge within ") + std::to_string(opt.max_intervals) +
                      " intervals" + (finite ? "" : " (non-finite integrand)"));
    }
    Piece worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b)) {
      // Interval at the resolution limit; accept it as is.
      for (std::size_t k = 0; k < K; ++k) total_err[k] -= worst.error[k];
      settled.push_back(worst);
      count += 1;
      continue;
    }
    Piece left = detail::gk21<K>(f, worst.a, mid);
    Piece right = detail::gk21<K>(f, mid, worst.b);
    for (std::size_t k = 0; k < K; ++k) {
      total[k] += left.value[k] + right.value[k] - worst.value[k];
      total_err[k] += left.error[k] + right.error[k] - worst.error[k];
      total_abs[k] += left.abs_value[k] + right.abs_value[k] - worst.abs_value[k];
    }
    left.priority = priority(left);
    right.priority = priority(right);
    queue.push(left);
    queue.push(right);
    count += 1;
  }

  // Re-sum from the pieces to avoid drift from the running updates.
  std::array<double, K> sum{}, err{};
  for (const auto& p : settled)
    for (std::size_t k = 0; k < K; ++k) {
      sum[k] += p.value[k];
      err[k] += p.error[k];
    }
  while (!queue.empty()) {
    const Piece& p = queue.top();
    for (std::size_t k = 0; k < K; ++k) {
      sum[k] += p.value[k];
      err[k] += p.error[k];
    }
    queue.pop();
  }
  out.value = sum;
  out.error = err;
  out.intervals = count;
  return out;
}

template <class F>
double integrate_scalar(F&& f, std::span<const double> breaks, const Options& opt = {}) {
  auto g = [&](double x) { return std::array<double, 1>{f(x)}; };
  return integrate<1>(g, breaks, opt).value[0];
}

template <class F>
double integrate_scalar(F&& f, double a, double b, const Options& opt = {}) {
  const std::array<double, 2> br{a, b};
  return integrate_scalar(f, std::span<const double>(br), opt);
}

}  // namespace mfk::quad
