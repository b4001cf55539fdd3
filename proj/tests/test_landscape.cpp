#include <cmath>

#include "doctest.h"
#include "mfk/error.hpp"
#include "mfk/landscape.hpp"

using namespace mfk;

namespace {

struct OracleRow {
  double eps, m_star, h_minus, curv_minus, phi2_minus, h_zero, curv_zero, phi2_zero;
};

// mpmath oracle (tools/oracles/frozen_values.py), J = 2.
constexpr OracleRow kRows[] = {
    {0.2, 0.911756998526573646833643527758, -0.701859895834844609457795646544, 7.19941684258712948886000752521,
     17.1994168425871294888600075252, -0.0176919115222181431829596471663, -3.09448558718738197147613136862,
     6.90551441281261802852386863138},
    {0.1, 0.959517589208509605050785512668, -1.58920917507943098927698880393, 17.276950506549044194834545335,
     37.276950506549044194834545335, 0.289451697791945707354017110905, -7.76850282719467616236106271689,
     12.2314971728053238376389372831},
    {0.05, 0.980541671394353887386424766246, -3.73511542930521173419737169238, 37.3249123528419137256532231595,
     77.3249123528419137256532231595, 0.610921814897753099281619910958, -17.4953550788874907487994261805,
     22.5046449211125092512005738195},
    {0.025, 0.990452318238167625364068102953, -8.38490658355334400451095186378, 77.3498404740017663523767518261,
     157.349840474001766352376751826, 0.942676502698106650497950069063, -37.2946396349938574255452801856,
     42.7053603650061425744547198144},
};

}  // namespace

TEST_CASE("critical points and curvatures against the oracle") {
  for (const auto& row : kRows) {
    CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, row.eps);
    auto s = find_critical_points(t, Regime::LowTemperature);
    CHECK(s.m_star == doctest::Approx(row.m_star).epsilon(1e-11));
    CHECK(s.h_minus == doctest::Approx(row.h_minus).epsilon(1e-10));
    CHECK(s.h_zero == doctest::Approx(row.h_zero).epsilon(1e-10));
    CHECK(s.curv_minus == doctest::Approx(row.curv_minus).epsilon(1e-9));
    CHECK(s.curv_zero == doctest::Approx(row.curv_zero).epsilon(1e-9));
    CHECK(s.phi2_zero == doctest::Approx(row.phi2_zero).epsilon(1e-9));
    CHECK(s.curv_zero < 0.0);
    CHECK(s.curv_minus > 0.0);
    CHECK(s.curv_plus > 0.0);
    CHECK(std::abs(s.h_plus - s.h_minus) <= 1e-10);
    CHECK(s.gradient_residual <= 1e-8);
    CHECK(s.fixed_point_residual <= 1e-8);
    CHECK(std::abs(hbar(t, s.m_star, 1)) <= 1e-8);
  }
}

TEST_CASE("m*_eps -> 1 linearly in eps with decreasing deviation") {
  double prev = 1.0;
  const double c = std::abs(kRows[1].m_star - 1.0) / 0.1;
  for (int i = 1; i < 4; ++i) {
    CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, kRows[i].eps);
    double dev = std::abs(find_critical_points(t, Regime::LowTemperature).m_star - 1.0);
    CHECK(dev < prev);
    CHECK(dev <= c * kRows[i].eps * (1 + 1e-9));
    prev = dev;
  }
}

TEST_CASE("hbar properties") {
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, 0.05);
  for (double m : {0.2, 0.7, 1.3}) CHECK(std::abs(hbar(t, m, 1) + hbar(t, -m, 1)) <= 1e-9);
  const double h = 1e-3;
  double fd = (hbar(t, h, 0) - 2 * hbar(t, 0, 0) + hbar(t, -h, 0)) / (h * h);
  CHECK(std::abs(fd - hbar(t, 0, 2)) <= 1e-4 * std::abs(hbar(t, 0, 2)));
  CHECK(hbar(t, 0, 2) == doctest::Approx(1.0 / t.cgf(0.0, 2) - 2.0 / 0.05).epsilon(1e-12));
  // Leading behaviour (J-1)/eps - J/eps = -1/eps.
  CHECK(hbar(t, 0, 2) * 0.05 == doctest::Approx(-1.0).epsilon(0.2));
  CHECK_THROWS_AS(hbar(t, 0, 3), Error);
}

TEST_CASE("quadratic potential: Hbar is a convex parabola and has no double well") {
  const double alpha = 3.0, J = 2.0, eps = 1.0;
  CramerTransform t(PotentialSpec::general("1.5*z^2", {1.5, 0.0}), J, eps);
  for (double m : {-1.0, 0.0, 0.5, 1.5}) CHECK(hbar(t, m, 2) == doctest::Approx(alpha - J).epsilon(1e-10));
  try {
    find_critical_points(t, Regime::HighTemperature);
    FAIL("expected NoDoubleWell");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoDoubleWell);
  }
}

TEST_CASE("high-temperature double well for Psi = z^4/4") {
  CramerTransform t(PotentialSpec::general("z^4/4", {0.25, 1.0}), 2.0, 1.0);
  auto s = find_critical_points(t, Regime::HighTemperature);
  CHECK(s.m_star > 0.0);
  CHECK(s.curv_plus > 0.0);
  CHECK(s.curv_zero < 0.0);
  CHECK_THROWS_AS(find_critical_points(CramerTransform(PotentialSpec::general("z^4/4", {0.25, 1.0}), 2.0, 0.5),
                                       Regime::HighTemperature),
                  Error);
}

TEST_CASE("metastable geometry") {
  CHECK(eta_width(100, 0.1, 20.0) == doctest::Approx(std::sqrt(2.0 * std::log(1000.0) / 2000.0)).epsilon(1e-15));
  CHECK(eta_width(100, 0.1, 20.0) == doctest::Approx(0.0831127).epsilon(1e-6));

  const auto& row = kRows[2];
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, 0.05);
  auto s = find_critical_points(t, Regime::LowTemperature);
  auto g = metastable_geometry(s, 50);
  CHECK(g.eta == doctest::Approx(std::sqrt(2.0) * std::sqrt(std::log(1000.0)) / std::sqrt(50 * row.curv_minus)).epsilon(1e-9));
  CHECK(g.rho == doctest::Approx(std::sqrt(std::log(50.0)) / std::sqrt(50 * -row.curv_zero)).epsilon(1e-9));
  CHECK(g.lower_level == doctest::Approx(-row.m_star + g.eta));
  CHECK(g.upper_level == doctest::Approx(row.m_star - g.eta));

  double prev = 1e9;
  for (int N : {10, 100, 1000, 10000}) {
    double r = metastable_geometry(s, N).rho;
    CHECK(r < prev);
    prev = r;
  }
  try {
    metastable_geometry(s, 1);
    FAIL("expected GeometryDegenerate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GeometryDegenerate);
  }
  CramerTransform warm(PotentialSpec::effective_quartic(2.0), 2.0, 0.5);
  CHECK_THROWS_AS(metastable_geometry(find_critical_points(warm, Regime::LowTemperature), 4), Error);
}
