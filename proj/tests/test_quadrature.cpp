#include <array>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "mfk/error.hpp"
#include "mfk/quadrature.hpp"

using namespace mfk;

TEST_CASE("single Kronrod panel integrates polynomials up to degree 31 exactly") {
  for (int deg = 0; deg <= 31; ++deg) {
    auto f = [deg](double x) { return std::array<double, 1>{std::pow(x, deg)}; };
    auto p = quad::detail::gk21<1>(f, -1.0, 1.0);
    double exact = (deg % 2 == 1) ? 0.0 : 2.0 / (deg + 1);
    CHECK(p.value[0] == doctest::Approx(exact).epsilon(1e-14));
  }
}

TEST_CASE("adaptive integration of standard integrals") {
  const std::array<double, 3> br{-12.0, 0.0, 12.0};
  double g = quad::integrate_scalar([](double x) { return std::exp(-x * x); }, br);
  CHECK(g == doctest::Approx(std::sqrt(std::numbers::pi)).epsilon(1e-13));

  double s = quad::integrate_scalar([](double x) { return std::sqrt(x); }, 0.0, 1.0);
  CHECK(s == doctest::Approx(2.0 / 3.0).epsilon(1e-11));

  double osc = quad::integrate_scalar([](double x) { return std::cos(40.0 * x); }, 0.0, std::numbers::pi / 2);
  CHECK(std::abs(osc) < 1e-12);
}

TEST_CASE("vector integrands converge per component") {
  auto f = [](double x) {
    double w = std::exp(-0.5 * x * x);
    return std::array<double, 3>{w, x * w, x * x * w};
  };
  const std::array<double, 2> br{-15.0, 15.0};
  auto r = quad::integrate<3>(f, br, {1e-13, 0.0, 2000});
  const double root2pi = std::sqrt(2.0 * std::numbers::pi);
  CHECK(r.value[0] == doctest::Approx(root2pi).epsilon(1e-13));
  CHECK(std::abs(r.value[1]) < 1e-13);
  CHECK(r.value[2] == doctest::Approx(root2pi).epsilon(1e-13));
}

TEST_CASE("non-convergence raises QuadratureFailure") {
  const std::array<double, 2> br{0.0, 1.0};
  auto bad = [](double x) { return std::array<double, 1>{1.0 / x}; };
  try {
    quad::integrate<1>(bad, br, {1e-12, 0.0, 50});
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::QuadratureFailure);
  }
}
