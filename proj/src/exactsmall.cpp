#include "mfk/exactsmall.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <thread>

#include "mfk/error.hpp"
#include "mfk/quadrature.hpp"

namespace mfk {

namespace {

constexpr double kLogDrop = 60.0;

void check_n(int N) {
  if (N < 1 || N > 4) throw Error(ErrorCode::InvalidArgument, "exact fiber integrals are limited to N in 1..4");
}

// Convolution powers of f(x) = e^{-(psi_J(x) - c)/eps} on [-R, R], with c = psi_J(m).
struct Fiber {
  const PotentialSpec& spec;
  double J, eps, m, c, R;
  quad::Options inner, outer;

  Fiber(const PotentialSpec& s, double J_, double eps_, double m_, double rel_tol)
      : spec(s), J(J_), eps(eps_), m(m_), c(s.effective(m_, 0, J_)) {
    const GrowthBound g = s.growth(J);
    if (!(g.alpha > 0.0)) throw Error(ErrorCode::InvalidArgument, "fiber integrals need a positive growth constant");
    // Beyond R every factor is below e^{-kLogDrop} relative to the shift.
    R = std::max({g.radius, std::abs(m), std::sqrt((std::max(c, 0.0) + kLogDrop * eps) / g.alpha)}) + 0.5;
    inner = quad::Options{rel_tol * 0.1, 0.0, 4000};
    outer = quad::Options{rel_tol, 0.0, 4000};
  }

  double f(double x) const {
    if (std::abs(x) > R) return 0.0;
    return std::exp(-(spec.effective(x, 0, J) - c) / eps);
  }

  static std::array<double, 3> breaks(double lo, double mid, double hi) { return {lo, std::clamp(mid, lo, hi), hi}; }

  // (f * f)(s)
  double g2(double s) const {
    const double lo = std::max(-R, s - R), hi = std::min(R, s + R);
    if (!(hi > lo)) return 0.0;
    const auto br = breaks(lo, 0.5 * s, hi);
    return quad::integrate_scalar([&](double x) { return f(x) * f(s - x); }, br, inner);
  }

  // (f * f * f)(s)
  double g3(double s) const {
    const double lo = std::max(-R, s - 2 * R), hi = std::min(R, s + 2 * R);
    if (!(hi > lo)) return 0.0;
    const auto br = breaks(lo, s / 3.0, hi);
    return quad::integrate_scalar([&](double x) { return f(x) * g2(s - x); }, br, inner);
  }

  // Lebesgue fiber integral f^{*N}(N m) and its error estimate.
  std::pair<double, double> convolution(int N) const {
    const double s = N * m;
    if (N == 2) {
      const double lo = std::max(-R, s - R), hi = std::min(R, s + R);
      const auto br = breaks(lo, m, hi);
      auto r = quad::integrate<1>([&](double x) { return std::array<double, 1>{f(x) * f(s - x)}; }, br, outer);
      return {r.value[0], r.error[0]};
    }
    if (N == 3) {
      const double lo = std::max(-R, s - 2 * R), hi = std::min(R, s + 2 * R);
      const auto br = breaks(lo, m, hi);
      auto r = quad::integrate<1>([&](double x) { return std::array<double, 1>{f(x) * g2(s - x)}; }, br, outer);
      return {r.value[0], r.error[0] + inner.rel_tol * std::abs(r.value[0])};
    }
    // N = 4: (f*f) * (f*f).
    const double lo = std::max(-2 * R, s - 2 * R), hi = std::min(2 * R, s + 2 * R);
    const auto br = breaks(lo, 2 * m, hi);
    auto r = quad::integrate<1>([&](double u) { return std::array<double, 1>{g2(u) * g2(s - u)}; }, br, outer);
    return {r.value[0], r.error[0] + 2 * inner.rel_tol * std::abs(r.value[0])};
  }

  // Integrals of {b(x_0) w, w} over the fiber, w the (shifted) product density,
  // integrating x_0 last; Lebesgue measure in the free coordinates.
  std::array<double, 2> weighted(int N, const std::function<double(double)>& b) const {
    const double s = N * m;
    auto rest = [&](double x) {
      const double r = s - x;
      return N == 2 ? f(r) : N == 3 ? g2(r) : g3(r);
    };
    const double reach = (N - 1) * R;
    const double lo = std::max(-R, s - reach), hi = std::min(R, s + reach);
    const std::array<double, 5> br{lo, std::clamp(m - 1.0, lo, hi), std::clamp(m, lo, hi), std::clamp(m + 1.0, lo, hi),
                                   hi};
    auto r = quad::integrate<2>(
        [&](double x) {
          const double w = f(x) * rest(x);
          return std::array<double, 2>{b(x) * w, w};
        },
        br, outer);
    return r.value;
  }
};

template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  std::atomic<int> cursor{0};
  std::vector<std::exception_ptr> errors(count);
  auto worker = [&] {
    for (int i = cursor++; i < count; i = cursor++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::clamp(threads, 1, std::max(count, 1)); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

HyperplaneIntegral phi_N_small(const PotentialSpec& spec, double J, double eps, int N, double m, double rel_tol) {
  check_n(N);
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  HyperplaneIntegral h;
  h.N = N;
  h.m = m;
  if (N == 1) {
    h.value = spec.effective(m, 0, J) / eps;
    return h;
  }
  const Fiber fib(spec, J, eps, m, rel_tol);
  const auto [I, err] = fib.convolution(N);
  if (!(I > 0.0) || !std::isfinite(I)) throw Error(ErrorCode::QuadratureFailure, "fiber integral is not positive");
  // -(1/N) log(sqrt(N) I e^{-N c/eps})
  h.value = fib.c / eps - (0.5 * std::log(static_cast<double>(N)) + std::log(I)) / N;
  h.error = err / (N * I);
  h.flagged = err > 10.0 * rel_tol * I;
  return h;
}

double fiber_expectation(const PotentialSpec& spec, double J, double eps, int N, double m,
                         const std::function<double(double)>& b, double rel_tol) {
  check_n(N);
  if (N == 1) return b(m);
  const Fiber fib(spec, J, eps, m, rel_tol);
  const auto r = fib.weighted(N, b);
  if (!(r[1] > 0.0)) throw Error(ErrorCode::QuadratureFailure, "fiber weight vanished");
  return r[0] / r[1];
}

double fiber_normalization(const PotentialSpec& spec, double J, double eps, int N, double m) {
  check_n(N);
  if (N == 1) return 1.0;
  const HyperplaneIntegral h = phi_N_small(spec, J, eps, N, m);
  const Fiber fib(spec, J, eps, m, 1e-11);
  const double mass = std::sqrt(static_cast<double>(N)) * fib.weighted(N, [](double) { return 1.0; })[1];
  // mass carries the shift e^{N c / eps}; e^{-N phi_N} carries the same.
  return mass * std::exp(N * h.value - N * fib.c / eps);
}

ScalingCheck sqrt_n_scaling(std::span<const int> Ns, std::span<const double> max_deviation, double band) {
  ScalingCheck s;
  s.band = band;
  s.Ns.assign(Ns.begin(), Ns.end());
  s.max_deviation.assign(max_deviation.begin(), max_deviation.end());
  for (size_t i = 0; i < Ns.size(); ++i) s.scaled.push_back(max_deviation[i] * std::sqrt(static_cast<double>(Ns[i])));
  if (s.scaled.empty()) return s;
  const auto [lo, hi] = std::minmax_element(s.scaled.begin(), s.scaled.end());
  s.band_ratio = *lo > 0.0 ? *hi / *lo : INFINITY;
  s.within_band = s.band_ratio <= band;
  return s;
}

CramerVerificationReport verify_local_cramer(const PotentialSpec& spec, double J, double eps, std::span<const int> Ns,
                                             std::span<const double> m_grid, int threads) {
  CramerTransform t(spec, J, eps);
  CramerVerificationReport rep;
  rep.J = J;
  rep.eps = eps;
  const int cols = static_cast<int>(m_grid.size());
  rep.rows.resize(Ns.size() * m_grid.size());
  parallel_for(static_cast<int>(rep.rows.size()), threads, [&](int k) {
    const int N = Ns[k / cols];
    const double m = m_grid[k % cols];
    const LegendrePoint p = t.cramer_transform(m);
    const HyperplaneIntegral h = phi_N_small(spec, J, eps, N, m);
    CramerVerificationRow& r = rep.rows[k];
    r.N = N;
    r.m = m;
    r.phi_N = h.value;
    r.phi = p.phi;
    r.phi2 = p.d2;
    r.ratio = std::exp(-N * h.value + N * p.phi - 0.5 * std::log(p.d2 / (2.0 * std::numbers::pi)));
    r.deviation = std::abs(r.ratio - 1.0);
  });
  std::vector<double> worst(Ns.size(), 0.0);
  for (size_t k = 0; k < rep.rows.size(); ++k) worst[k / cols] = std::max(worst[k / cols], rep.rows[k].deviation);
  rep.scaling = sqrt_n_scaling(Ns, worst);
  return rep;
}

ObservableReport verify_equiv_observables(const PotentialSpec& spec, double J, double eps, std::span<const int> Ns,
                                          const std::function<double(double)>& b, const std::string& name,
                                          std::span<const double> m_grid, int threads) {
  CramerTransform t(spec, J, eps);
  ObservableReport rep;
  rep.observable = name;
  rep.J = J;
  rep.eps = eps;
  const int cols = static_cast<int>(m_grid.size());
  rep.rows.resize(Ns.size() * m_grid.size());
  parallel_for(static_cast<int>(rep.rows.size()), threads, [&](int k) {
    const int N = Ns[k / cols];
    const double m = m_grid[k % cols];
    const double sigma = t.cramer_transform(m).sigma;
    ObservableRow& r = rep.rows[k];
    r.N = N;
    r.m = m;
    r.fiber = fiber_expectation(spec, J, eps, N, m, b);
    r.tilted = t.tilted_expectation(sigma, b);
    r.gap = std::abs(r.fiber - r.tilted);
  });
  std::vector<double> worst(Ns.size(), 0.0);
  for (size_t k = 0; k < rep.rows.size(); ++k) worst[k / cols] = std::max(worst[k / cols], rep.rows[k].gap);
  rep.scaling = sqrt_n_scaling(Ns, worst);
  return rep;
}

}  // namespace mfk
