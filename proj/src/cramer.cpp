#include "mfk/cramer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "log_window.hpp"
#include "mfk/error.hpp"
#include "mfk/quadrature.hpp"
#include "solve.hpp"

namespace mfk {

struct CramerTransform::Window {
  double mode = 0.0;
  double log_max = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> breaks;
};

CramerTransform::CramerTransform(PotentialSpec potential, double J, double eps, CramerSettings settings)
    : potential_(std::move(potential)), J_(J), eps_(eps), settings_(settings) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw Error(ErrorCode::InvalidArgument, "temperature eps must be positive");
  if (!(J >= 0.0) || !std::isfinite(J)) throw Error(ErrorCode::InvalidArgument, "coupling J must be non-negative");
  if (potential_.kind() == PotentialKind::EffectiveQuartic && std::abs(potential_.declared_coupling() - J) > 1e-12)
    throw Error(ErrorCode::InvalidArgument, "EffectiveQuartic declared with a different coupling than J");
}

CramerTransform::Window CramerTransform::window(double sigma) const {
  const double inv_eps = 1.0 / eps_;
  auto logf = [&](double z) {
    auto d = potential_.effective_all(z, J_);
    return std::array<double, 3>{sigma * z - d[0] * inv_eps, sigma - d[1] * inv_eps, -d[2] * inv_eps};
  };
  const double drop = settings_.log_drop;
  Window w;
  if (potential_.is_quartic() && J_ > 1.0) {
    // Strictly convex: the unique mode solves z^3 + (J-1) z = eps sigma.
    const double z = detail::depressed_cubic_root(J_ - 1.0, -eps_ * sigma);
    w.mode = detail::refine_max(logf, z - 1.0 - std::abs(z), z + 1.0 + std::abs(z), z);
    auto top = logf(w.mode);
    w.log_max = top[0];
    if (!std::isfinite(w.log_max)) throw Error(ErrorCode::Overflow, "tilted density overflows at sigma=" + std::to_string(sigma));
    const double width = 1.0 / std::sqrt(-top[2]);
    const double threshold = w.log_max - drop;
    auto march = [&](double dir) {
      double step = width;
      double zz = w.mode + dir * step;
      while (logf(zz)[0] > threshold) {
        step *= 1.5;
        zz = w.mode + dir * step;
        if (step > 1e6) throw Error(ErrorCode::QuadratureFailure, "tail truncation does not reach tolerance");
      }
      return zz;
    };
    w.lo = march(-1.0);
    w.hi = march(1.0);
    w.breaks = {w.lo};
    for (double off : {-4.0, -1.0, 0.0, 1.0, 4.0}) {
      double b = w.mode + off * width;
      if (b > w.lo && b < w.hi) w.breaks.push_back(b);
    }
    w.breaks.push_back(w.hi);
    return w;
  }
  const GrowthBound g = potential_.growth(J_);
  const double reach = detail::tail_reach(sigma, eps_, g.alpha, g.radius, logf(0.0)[0], drop);
  auto lw = detail::log_window(logf, reach, drop);
  if (!std::isfinite(lw.log_max)) throw Error(ErrorCode::Overflow, "tilted density overflows at sigma=" + std::to_string(sigma));
  w.mode = lw.mode;
  w.log_max = lw.log_max;
  w.lo = lw.lo;
  w.hi = lw.hi;
  w.breaks = std::move(lw.breaks);
  return w;
}

TiltedCumulants CramerTransform::cumulants(double sigma) const {
  if (!std::isfinite(sigma)) throw Error(ErrorCode::Overflow, "non-finite tilt");
  const Window w = window(sigma);
  const double inv_eps = 1.0 / eps_;
  const double c = w.mode;
  auto integrand = [&](double z) {
    const double d = z - c;
    const double p = std::exp(sigma * z - potential_.effective(z, 0, J_) * inv_eps - w.log_max);
    const double d2 = d * d;
    return std::array<double, 5>{p, p * d, p * d2, p * d2 * d, p * d2 * d2};
  };
  auto r = quad::integrate<5>(integrand, w.breaks, {settings_.rel_tol, 0.0, 4000});
  const double m0 = r.value[0];
  if (!(m0 > 0.0) || !std::isfinite(m0)) throw Error(ErrorCode::QuadratureFailure, "partition integral not positive");
  const double e1 = r.value[1] / m0, e2 = r.value[2] / m0, e3 = r.value[3] / m0, e4 = r.value[4] / m0;
  TiltedCumulants out;
  out.sigma = sigma;
  out.log_partition = std::log(m0) + w.log_max;
  out.mean = c + e1;
  out.variance = e2 - e1 * e1;
  out.third = e3 - 3.0 * e1 * e2 + 2.0 * e1 * e1 * e1;
  out.fourth = e4 - 4.0 * e1 * e3 + 6.0 * e1 * e1 * e2 - 3.0 * e1 * e1 * e1 * e1;
  out.truncation_lo = w.lo;
  out.truncation_hi = w.hi;
  return out;
}

double CramerTransform::cgf(double sigma, int order) const {
  if (order < 0 || order > 4) throw Error(ErrorCode::UnsupportedOrder, "cgf order outside 0..4");
  const TiltedCumulants c = cumulants(sigma);
  switch (order) {
    case 0: return c.log_partition;
    case 1: return c.mean;
    case 2: return c.variance;
    case 3: return c.third;
    default: return c.fourth - 3.0 * c.variance * c.variance;
  }
}

LegendrePoint CramerTransform::invert(double m) const {
  const double tol = settings_.inversion_tol * std::max(1.0, std::abs(m));
  double sigma = potential_.effective(m, 1, J_) / eps_;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const TiltedCumulants c = cumulants(sigma);
    const double f = c.mean - m;
    const bool bracketed_tight = std::isfinite(lo) && std::isfinite(hi) && hi - lo <= 1e-15 * (1.0 + std::abs(sigma));
    if (std::abs(f) <= tol || bracketed_tight) {
      LegendrePoint p;
      p.m = m;
      p.sigma = sigma;
      p.phi = sigma * m - c.log_partition;
      p.d2 = 1.0 / c.variance;
      p.d3 = -c.third / (c.variance * c.variance * c.variance);
      p.residual = std::abs(f);
      return p;
    }
    if (f < 0.0) {
      lo = sigma;
    } else {
      hi = sigma;
    }
    double step = -f / c.variance;
    const double cap = 4.0 * (1.0 + std::abs(sigma));
    step = std::clamp(step, -cap, cap);
    double next = sigma + step;
    if (std::isfinite(lo) && std::isfinite(hi)) {
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    } else if (std::isfinite(lo) && next <= lo) {
      next = lo + std::abs(step) + 1.0;
    } else if (std::isfinite(hi) && next >= hi) {
      next = hi - std::abs(step) - 1.0;
    }
    sigma = next;
  }
  throw Error(ErrorCode::SolverFailure, "Legendre inversion did not converge at m=" + std::to_string(m));
}

LegendrePoint CramerTransform::cramer_transform(double m) const {
  if (!std::isfinite(m)) throw Error(ErrorCode::InvalidArgument, "non-finite m");
  if (!settings_.memoize) return invert(m);
  const long long key = std::llround(m * 1e12);
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
  }
  LegendrePoint p = invert(m);
  std::lock_guard lock(mutex_);
  cache_.emplace(key, p);
  return p;
}

std::size_t CramerTransform::cache_size() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

TiltedMoments CramerTransform::tilted_moments(double m) const {
  const LegendrePoint p = cramer_transform(m);
  const TiltedCumulants c = cumulants(p.sigma);
  TiltedMoments t;
  t.m = m;
  t.sigma = p.sigma;
  t.mean = c.mean;
  t.central = {c.variance, c.third, c.fourth};
  t.s = std::sqrt(c.variance);
  t.tau = eps_ * p.sigma;

  Window w = window(p.sigma);
  if (m > w.lo && m < w.hi) {
    w.breaks.push_back(m);
    std::sort(w.breaks.begin(), w.breaks.end());
    w.breaks.erase(std::unique(w.breaks.begin(), w.breaks.end()), w.breaks.end());
  }
  const double inv_s = 1.0 / t.s;
  auto integrand = [&](double z) {
    const double p0 = std::exp(p.sigma * z - potential_.effective(z, 0, J_) / eps_ - w.log_max);
    const double a = std::abs(z - m) * inv_s;
    return std::array<double, 5>{p0, p0 * a, p0 * a * a, p0 * a * a * a, p0 * a * a * a * a};
  };
  auto r = quad::integrate<5>(integrand, w.breaks, {settings_.rel_tol, 0.0, 4000});
  for (int k = 0; k < 4; ++k) t.abs_normalized[k] = r.value[k + 1] / r.value[0];
  return t;
}

DecayReport CramerTransform::char_fn_decay(double m, std::span<const double> xi) const {
  const LegendrePoint p = cramer_transform(m);
  const Window w = window(p.sigma);
  const double s = std::sqrt(1.0 / p.d2);
  DecayReport out;
  for (double x : xi) {
    if (x == 0.0) throw Error(ErrorCode::InvalidArgument, "char_fn_decay needs nonzero xi");
    if (std::abs(x) > settings_.xi_cap)
      throw Error(ErrorCode::OscillatoryQuadratureFailure, "|xi| above the configured cap");
    // Break the window at every half period of the oscillation.
    const double half = std::numbers::pi * s / std::abs(x);
    std::vector<double> breaks = w.breaks;
    for (double b = w.lo + half; b < w.hi; b += half) breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    const double k = x / s;
    auto integrand = [&](double z) {
      const double p0 = std::exp(p.sigma * z - potential_.effective(z, 0, J_) / eps_ - w.log_max);
      const double ph = k * (z - m);
      return std::array<double, 3>{p0, p0 * std::cos(ph), p0 * std::sin(ph)};
    };
    const int max_intervals = static_cast<int>(breaks.size()) * 8 + 4000;
    auto r = quad::integrate<3>(integrand, breaks, {1e-12, 0.0, max_intervals});
    const double mod = std::hypot(r.value[1], r.value[2]) / r.value[0];
    out.xi.push_back(x);
    out.modulus.push_back(mod);
  }
  std::size_t arg = 0;
  for (std::size_t i = 0; i < out.xi.size(); ++i) {
    const double v = std::abs(out.xi[i]) * out.modulus[i];
    if (v > out.c_hat) {
      out.c_hat = v;
      arg = i;
    }
  }
  if (out.xi.size() >= 2) {
    std::size_t widest = 0;
    for (std::size_t i = 1; i < out.xi.size(); ++i)
      if (std::abs(out.xi[i]) > std::abs(out.xi[widest])) widest = i;
    double without = 0.0;
    for (std::size_t i = 0; i < out.xi.size(); ++i)
      if (i != widest) without = std::max(without, std::abs(out.xi[i]) * out.modulus[i]);
    out.growing = arg == widest && out.c_hat > 1.5 * without;
  }
  return out;
}

double CramerTransform::tilted_expectation(double sigma, const std::function<double(double)>& f) const {
  const Window w = window(sigma);
  auto integrand = [&](double z) {
    const double p0 = std::exp(sigma * z - potential_.effective(z, 0, J_) / eps_ - w.log_max);
    return std::array<double, 2>{p0, p0 * f(z)};
  };
  auto r = quad::integrate<2>(integrand, w.breaks, {1e-12, 0.0, 4000});
  return r.value[1] / r.value[0];
}

}  // namespace mfk
