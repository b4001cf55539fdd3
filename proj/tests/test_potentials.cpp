#include <cmath>

#include "doctest.h"
#include "mfk/error.hpp"
#include "mfk/potentials.hpp"

using namespace mfk;

TEST_CASE("closed-form evaluations") {
  auto eq = PotentialSpec::effective_quartic(2.0);
  CHECK(eval_potential(eq, 1.0, 0) == 0.75);
  CHECK(eval_potential(eq, 1.0, 2) == 4.0);
  CHECK(eval_potential(PotentialSpec::quartic_double_well(), 0.0, 1) == 0.0);
  CHECK_THROWS_AS(eval_potential(eq, 1.0, 5), Error);
}

TEST_CASE("symmetry: k-th derivative has parity (-1)^k") {
  auto general = PotentialSpec::general("z^4/4 + exp(-z^2)", {0.2, 1.0});
  for (const auto& spec : {PotentialSpec::quartic_double_well(), PotentialSpec::effective_quartic(1.7), general}) {
    for (double z : {0.1, 0.5, 1.3, 2.7}) {
      for (int k = 0; k <= 4; ++k) {
        double sign = (k % 2 == 0) ? 1.0 : -1.0;
        CHECK(eval_potential(spec, z, k) == sign * eval_potential(spec, -z, k));
      }
    }
  }
}

TEST_CASE("effective quartic equals the double well plus J z^2/2") {
  auto dw = PotentialSpec::quartic_double_well();
  for (double J : {0.5, 2.0, 3.3}) {
    auto eq = PotentialSpec::effective_quartic(J);
    for (double z = -3.0; z <= 3.0; z += 0.37) {
      double lhs = eval_potential(eq, z, 0);
      double rhs = eval_potential(dw, z, 0) + 0.5 * J * z * z;
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-15));
    }
  }
}

TEST_CASE("derivative consistency against central differences") {
  auto general = PotentialSpec::general("z^4/4 + 0.3*exp(-z^2)", {0.2, 1.0});
  for (const auto& spec : {PotentialSpec::effective_quartic(2.0), general}) {
    for (double z = -2.0; z <= 2.0; z += 0.25) {
      for (int k = 1; k <= 4; ++k) {
        const double h = 1e-4;
        double fd = (eval_potential(spec, z + h, k - 1) - eval_potential(spec, z - h, k - 1)) / (2 * h);
        double v = eval_potential(spec, z, k);
        CHECK(std::abs(v - fd) <= 1e-5 * std::max(1.0, std::abs(v)));
      }
    }
  }
}

TEST_CASE("effective quartic with J > 1 is strictly convex") {
  for (double J : {1.1, 2.0, 5.0})
    for (double z = -4.0; z <= 4.0; z += 0.01) CHECK(eval_potential(PotentialSpec::effective_quartic(J), z, 2) >= J - 1.0);
}

TEST_CASE("cubic force detection") {
  auto f = PotentialSpec::effective_quartic(2.0).cubic_force(2.0);
  REQUIRE(f);
  CHECK(f->a3 == 1.0);
  CHECK(f->a1 == -1.0);
  auto g = PotentialSpec::general("z^4/4", {0.25, 1.0}).cubic_force(2.0);
  REQUIRE(g);
  CHECK(g->a3 == doctest::Approx(1.0));
  CHECK(g->a1 == doctest::Approx(-2.0));
  CHECK_FALSE(PotentialSpec::general("z^4/4 + exp(-z^2)", {0.25, 1.0}).cubic_force(2.0));
}

TEST_CASE("check_assumption on the quartic passes every evaluated clause") {
  auto report = check_assumption(PotentialSpec::effective_quartic(2.0), 2.0);
  CHECK(report.passed());
  for (int i : {0, 1, 2, 3, 5}) CHECK(report.clauses[i].status == ClauseStatus::Pass);
  CHECK(report.clauses[4].status == ClauseStatus::NotEvaluated);
}

TEST_CASE("clause (5) for Psi = z^4/4 uses the quadrature ratio") {
  // 2 Gamma(3/4) / Gamma(1/4), mpmath oracle.
  const double ratio = 0.675978240067284728995447684671;
  Splitting split{Expression::parse("exp(-z^2)"), 1.0, 2.0};
  auto spec = PotentialSpec::general("z^4/4", {0.25, 1.0}, split);
  auto at2 = check_assumption(spec, 2.0);
  CHECK(at2.second_moment_ratio == doctest::Approx(ratio).epsilon(1e-10));
  CHECK(at2.clauses[4].status == ClauseStatus::Pass);
  auto at14 = check_assumption(spec, 1.4);
  CHECK(at14.clauses[4].status == ClauseStatus::Fail);
}

TEST_CASE("quadratic Psi with c_Psi <= J fails clause (4)") {
  auto spec = PotentialSpec::general("0.75*z^2", {0.75, 0.0});
  auto report = check_assumption(spec, 2.0);
  CHECK(report.clauses[3].status == ClauseStatus::Fail);
  auto ok = check_assumption(PotentialSpec::general("3*z^2", {3.0, 0.0}), 2.0);
  CHECK(ok.clauses[3].status == ClauseStatus::Pass);
  // ... and then clause (5) fails instead: no quadratic Psi satisfies both.
  CHECK(ok.clauses[4].status == ClauseStatus::Fail);
}

TEST_CASE("asymmetric potential fails the symmetry clause") {
  auto spec = PotentialSpec::general("z^4/4 - z^2/2 + z", {0.2, 2.0});
  auto report = check_assumption(spec, 2.0);
  CHECK(report.clauses[1].status == ClauseStatus::Fail);
  CHECK_FALSE(report.passed());
}

TEST_CASE("Psi' not convex on the half line fails clause (3)") {
  // Psi' = z - sin-like bump: use z^2/2 - exp(-z^2) whose derivative is concave near 0.5.
  auto spec = PotentialSpec::general("z^2 + 2*exp(-z^2)", {0.5, 2.0});
  auto report = check_assumption(spec, 1.0);
  CHECK(report.clauses[2].status == ClauseStatus::Fail);
}
