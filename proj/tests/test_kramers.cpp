#include <cmath>
#include <functional>
#include <numbers>

#include "doctest.h"
#include "mfk/error.hpp"
#include "mfk/kramers.hpp"

using namespace mfk;

namespace {

// Composite Simpson on [a, b] with n (even) panels.
double simpson(const std::function<double(double)>& f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Tilted measure e^{sigma z - W(z)} on a fixed grid; sigma found by bisection on the mean.
struct BruteTilt {
  std::function<double(double)> W;
  double L = 6.0;

  double moment(double sigma, const std::function<double(double)>& f) const {
    const double z0 = 0.0;
    const double w0 = sigma * z0 - W(z0);
    double shift = w0;
    for (int i = 0; i <= 400; ++i) {
      const double z = -L + 2 * L * i / 400.0;
      shift = std::max(shift, sigma * z - W(z));
    }
    auto dens = [&](double z) { return std::exp(sigma * z - W(z) - shift); };
    return simpson([&](double z) { return f(z) * dens(z); }, -L, L) / simpson(dens, -L, L);
  }

  double sigma_for(double m) const {
    double lo = -40, hi = 40;
    for (int i = 0; i < 70; ++i) {
      const double mid = 0.5 * (lo + hi);
      (moment(mid, [](double z) { return z; }) < m ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
};

LandscapeSummary low(double eps) {
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, eps);
  return find_critical_points(t, Regime::LowTemperature);
}

}  // namespace

TEST_CASE("mean time is mass over upper capacity in log space") {
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, 0.1);
  auto s = find_critical_points(t, Regime::LowTemperature);
  for (int N : {1, 2, 10, 100, 1000}) {
    auto k = ek_prediction(s, t, N);
    CHECK(k.mean_time.log == k.equilibrium_mass.log - k.capacity_upper.value.log);
    CHECK(std::abs(k.mean_time.log + k.capacity_upper.value.log - k.equilibrium_mass.log) <=
          1e-12 * std::max(1.0, std::abs(k.mean_time.log)));
    CHECK(ek_log_time(s, N).log == k.mean_time.log);
  }
}

TEST_CASE("closed form from frozen landscape values") {
  // mpmath row for J = 2, eps = 0.1.
  const double eps = 0.1, hm = -1.58920917507943098927698880393, cm = 17.276950506549044194834545335,
               pm = 37.276950506549044194834545335, h0 = 0.289451697791945707354017110905,
               c0 = -7.76850282719467616236106271689, p0 = 12.2314971728053238376389372831;
  const int N = 20;
  const double expected = std::log(2 * std::numbers::pi) + 0.5 * std::log(pm) + N * (h0 - hm) - std::log(eps) -
                          0.5 * std::log(cm * std::abs(c0) * p0);
  CHECK(ek_log_time(low(eps), N).log == doctest::Approx(expected).epsilon(1e-10));
  const double cap = std::log(eps / (2 * std::numbers::pi)) - N * h0 + 0.5 * std::log(-c0) + 0.5 * std::log(p0);
  CHECK(capacity_upper(low(eps), N).value.log == doctest::Approx(cap).epsilon(1e-10));
}

TEST_CASE("doubling N adds N times the barrier") {
  auto s = low(0.05);
  for (int N : {1, 3, 8, 50, 400}) {
    const double d = ek_log_time(s, 2 * N).log - ek_log_time(s, N).log;
    CHECK(d == doctest::Approx(N * s.barrier).epsilon(1e-12));
  }
}

TEST_CASE("barrier dominates log T / N") {
  auto s = low(0.1);
  const double c = ek_log_time(s, 1).log - s.barrier;
  for (int N = 4; N <= 64; ++N) {
    const double r = ek_log_time(s, N).log / N;
    CHECK(std::abs(r - s.barrier) <= std::abs(c) / N + 1e-12);
  }
}

TEST_CASE("geometry is optional in the prediction") {
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, 0.1);
  auto s = find_critical_points(t, Regime::LowTemperature);
  CHECK_FALSE(ek_prediction(s, t, 1).geometry.has_value());
  auto k = ek_prediction(s, t, 200);
  REQUIRE(k.geometry.has_value());
  CHECK(k.geometry->eta < s.m_star);
  CHECK(k.error_orders.find("O(eps)") != std::string::npos);
  CHECK_THROWS_AS(ek_prediction(s, t, 0), Error);
  CramerTransform other(PotentialSpec::effective_quartic(2.0), 2.0, 0.2);
  CHECK_THROWS_AS(ek_prediction(s, other, 10), Error);
}

TEST_CASE("lower capacity prefactor") {
  auto s = low(0.1);
  auto up = capacity_upper(s, 30);
  auto lo = capacity_lower(s, 30, 5.0);
  CHECK(lo.value.log == up.value.log);  // a is ignored at low temperature
  CHECK(lo.error_orders.find("O(eps)") != std::string::npos);

  CramerTransform ht(PotentialSpec::general("z^4/4", {0.25, 1.0}), 2.0, 1.0);
  auto hs = find_critical_points(ht, Regime::HighTemperature);
  auto hl = capacity_lower(hs, 30, 0.5);
  CHECK(hl.prefactor == doctest::Approx(1.0 / 1.5));
  CHECK(hl.value.log == doctest::Approx(capacity_upper(hs, 30).value.log - std::log(1.5)));
  CHECK(hl.error_orders.find("eps") == std::string::npos);
  CHECK_THROWS_AS(capacity_lower(hs, 30, -1.0), Error);
}

TEST_CASE("equilibrium mass is symmetric for an even potential") {
  auto s = low(0.1);
  CHECK(equilibrium_mass(s, 40).log == doctest::Approx(equilibrium_mass(s, 40, true).log).epsilon(1e-9));
}

TEST_CASE("h* boundary values, symmetry and monotonicity") {
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, 0.1);
  auto s = find_critical_points(t, Regime::LowTemperature);
  const int N = 30;
  const double rho = rho_width(N, s.curv_zero);
  CHECK(h_star(t, -rho, rho, N) == 1.0);
  CHECK(h_star(t, rho, rho, N) == 0.0);
  CHECK(h_star(t, 0.0, rho, N) == doctest::Approx(0.5).epsilon(1e-10));
  double prev = 1.0;
  for (int i = -9; i <= 9; ++i) {
    const double v = h_star(t, rho * i / 10.0, rho, N);
    CHECK(v < prev);
    CHECK(v > 0.0);
    CHECK(h_star(t, -rho * i / 10.0, rho, N) == doctest::Approx(1.0 - v).epsilon(1e-10));
    prev = v;
  }
  CHECK_THROWS_AS(h_star(t, 2 * rho, rho, N), Error);
}

TEST_CASE("h* against a brute-force oracle and the Euler-Lagrange relation") {
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, 0.1);
  auto s = find_critical_points(t, Regime::LowTemperature);
  const int N = 30;
  const double rho = rho_width(N, s.curv_zero);
  auto g = [&](double z) { return std::exp(N * (hbar(t, z, 0) - s.h_zero)) / std::sqrt(hbar(t, z, 2) + 20.0); };
  const double total = simpson(g, -rho, rho, 400);
  const double m = 0.5 * rho;
  CHECK(h_star(t, m, rho, N) == doctest::Approx(simpson(g, m, rho, 400) / total).epsilon(1e-9));

  // h*' = -g / int g at interior points.
  const double d = 1e-5;
  for (double x : {-0.7 * rho, -0.2 * rho, 0.3 * rho, 0.8 * rho}) {
    const double deriv = (h_star(t, x + d, rho, N) - h_star(t, x - d, rho, N)) / (2 * d);
    CHECK(deriv * total / -g(x) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("rough bounds constant against a brute-force tilted variance") {
  CramerTransform t(PotentialSpec::general("z^4/4", {0.25, 1.0}), 2.0, 1.0);
  auto s = find_critical_points(t, Regime::HighTemperature);
  const int grid = 11;
  auto r = rough_bounds(s, t, 25, 1.0, grid);

  BruteTilt bt{[](double z) { return z * z * z * z / 4.0; }};
  double worst = 0.0;
  for (int i = 0; i < grid; ++i) {
    const double m = -s.m_star + 2.0 * s.m_star * i / (grid - 1);
    const double sg = bt.sigma_for(m);
    const double mean = bt.moment(sg, [](double z) { return 3 * z * z; });
    worst = std::max(worst, bt.moment(sg, [&](double z) { return (3 * z * z - mean) * (3 * z * z - mean); }));
  }
  CHECK(r.a == doctest::Approx(worst).epsilon(1e-7));
  CHECK(rough_bounds(s, t, 25, 2.0, grid).a == doctest::Approx(worst / 4.0).epsilon(1e-7));
  CHECK(r.upper.log - r.lower.log == doctest::Approx(std::log1p(r.a)));
  CHECK(r.lower.log == ek_log_time(s, 25).log);

  CHECK_THROWS_WITH_AS(rough_bounds(s, t, 25, 0.0), doctest::Contains("InvalidPoincare"), Error);
  CHECK_THROWS_AS(rough_bounds(low(0.1), t, 25, 1.0), Error);
}

TEST_CASE("one-dimensional capacity cross-check") {
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, 0.05);
  auto s = find_critical_points(t, Regime::LowTemperature);
  auto c = capacity_cross_check_1d(s, t);
  CHECK(c.half_width == doctest::Approx(s.m_star - eta_width(1, 0.05, s.curv_minus)));

  // Exact capacity of the scalar double well, eps / int e^{psi/eps}.
  const double eps = 0.05, a = c.half_width;
  auto inv = [&](double z) { return std::exp((z * z * z * z / 4 - z * z / 2) / eps); };
  CHECK(c.exact_microscopic == doctest::Approx(eps / simpson(inv, -a, a)).epsilon(1e-9));

  CHECK(c.dirichlet / c.formula == doctest::Approx(1.0).epsilon(0.1));
  CHECK(c.exact_microscopic / c.formula == doctest::Approx(1.0).epsilon(0.1));
  CHECK(c.mass_quadrature / c.mass_formula == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("log values expose a linear form only when representable") {
  CHECK(LogValue{std::log(3.0)}.linear().value() == doctest::Approx(3.0));
  CHECK_FALSE(LogValue{800.0}.linear().has_value());
  CHECK_FALSE(LogValue{-800.0}.linear().has_value());
}
