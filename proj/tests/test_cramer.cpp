#include <cmath>
#include <numbers>
#include <thread>
#include <vector>

#include "doctest.h"
#include "mfk/cramer.hpp"
#include "mfk/error.hpp"

using namespace mfk;

namespace {

PotentialSpec quadratic(double alpha) {
  return PotentialSpec::general(std::to_string(alpha) + "*z^2/2", {alpha / 2.0, 0.0});
}

}  // namespace

TEST_CASE("Gaussian closed forms") {
  const double alpha = 3.0, eps = 0.2;
  CramerTransform t(quadratic(alpha), 2.0, eps);
  for (double sigma : {-3.0, 0.0, 1.5}) {
    CHECK(t.cgf(sigma, 0) == doctest::Approx(eps * sigma * sigma / (2 * alpha) + 0.5 * std::log(2 * std::numbers::pi * eps / alpha)).epsilon(1e-12));
    CHECK(t.cgf(sigma, 1) == doctest::Approx(eps * sigma / alpha).epsilon(1e-12));
    CHECK(t.cgf(sigma, 2) == doctest::Approx(eps / alpha).epsilon(1e-12));
    CHECK(std::abs(t.cgf(sigma, 3)) < 1e-12);
    CHECK(std::abs(t.cgf(sigma, 4)) < 1e-11);
  }
  for (double m = -2.0; m <= 2.0; m += 0.25) {
    auto p = t.cramer_transform(m);
    CHECK(p.phi == doctest::Approx(alpha * m * m / (2 * eps) - 0.5 * std::log(2 * std::numbers::pi * eps / alpha)).epsilon(1e-11));
    CHECK(p.d2 == doctest::Approx(alpha / eps).epsilon(1e-11));
    auto tm = t.tilted_moments(m);
    CHECK(tm.s * tm.s == doctest::Approx(eps / alpha).epsilon(1e-11));
    CHECK(tm.abs_normalized[0] == doctest::Approx(std::sqrt(2 / std::numbers::pi)).epsilon(1e-10));
    CHECK(tm.abs_normalized[1] == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(tm.abs_normalized[3] == doctest::Approx(3.0).epsilon(1e-10));
  }
  std::vector<double> xi{1.0, 2.0, 3.0};
  auto d = t.char_fn_decay(0.4, xi);
  for (std::size_t i = 0; i < xi.size(); ++i) {
    CHECK(d.modulus[i] == doctest::Approx(std::exp(-xi[i] * xi[i] / 2)).epsilon(1e-9));
    CHECK(d.modulus[i] <= 1.0 / xi[i]);
  }
}

TEST_CASE("symmetric quartic: odd cumulant at zero tilt and phi'(0)") {
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, 0.1);
  CHECK(std::abs(t.cgf(0.0, 1)) < 1e-14);
  CHECK(std::abs(t.cgf(0.0, 3)) < 1e-14);
  CHECK(std::abs(t.cramer_transform(0.0).sigma) < 1e-12);
}

TEST_CASE("tilted variance against the high-precision oracle") {
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, 0.1);
  CHECK(t.cgf(1.0, 2) == doctest::Approx(0.0808644542794005169886897832724).epsilon(1e-9));
}

TEST_CASE("Legendre transform against the high-precision oracle") {
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, 0.1);
  auto p = t.cramer_transform(0.5);
  CHECK(p.sigma == doctest::Approx(7.03728810151237677813968477022).epsilon(1e-10));
  CHECK(p.phi == doctest::Approx(1.93045828800307751914617898547).epsilon(1e-10));
  CHECK(p.d2 == doctest::Approx(18.0450959455945016971436131132).epsilon(1e-9));
  CHECK(p.d3 == doctest::Approx(25.8322174255764680904729390298).epsilon(1e-8));
  CHECK(std::abs(t.cgf(p.sigma, 1) - 0.5) <= 1e-8);
}

TEST_CASE("duality, derivative identities and evenness on a grid") {
  for (double eps : {0.5, 0.1, 0.05}) {
    CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, eps);
    for (double m = -2.0; m <= 2.0001; m += 0.25) {
      auto p = t.cramer_transform(m);
      CHECK(std::abs(t.cgf(p.sigma, 1) - m) <= 1e-7);
      CHECK(std::abs(p.d2 * t.cgf(p.sigma, 2) - 1.0) <= 1e-6);
      CHECK(std::abs(p.phi - t.cramer_transform(-m).phi) <= 1e-9 * std::max(1.0, std::abs(p.phi)));
      CHECK(p.d2 > 0.0);
      const double h = 1e-4;
      double fd = (t.cramer_transform(m + h).d2 - t.cramer_transform(m - h).d2) / (2 * h);
      CHECK(std::abs(p.d3 - fd) <= 1e-4 * std::max(1.0, std::abs(p.d3)));
    }
    CHECK(t.cgf(0.7, 0) == doctest::Approx(t.cgf(-0.7, 0)).epsilon(1e-13));
  }
}

TEST_CASE("s_eps^2 / eps approaches 1 / psi_J''(0) = 1/(J-1)") {
  double previous = 1e9;
  for (double eps : {0.2, 0.1, 0.05}) {
    CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, eps);
    auto tm = t.tilted_moments(0.0);
    double dev = std::abs(tm.s * tm.s / eps - 1.0);
    CHECK(dev < previous);
    CHECK(dev <= 4.0 * eps);
    previous = dev;
    CHECK(tm.abs_normalized[0] <= 1.0);
    CHECK(tm.abs_normalized[1] == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("tau = eps phi'(m) stays bounded on a compact grid") {
  for (double eps : {0.2, 0.1, 0.05, 0.025}) {
    CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, eps);
    for (double m : {-1.5, -0.5, 0.0, 1.0, 1.5}) CHECK(std::abs(t.tilted_moments(m).tau) < 5.0);
  }
}

TEST_CASE("characteristic function decays like 1/xi") {
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, 0.1);
  std::vector<double> xi{2.0, 4.0, 8.0, 16.0};
  auto d = t.char_fn_decay(0.0, xi);
  CHECK_FALSE(d.growing);
  CHECK(d.c_hat < 2.0);
  std::vector<double> zero{0.0};
  CHECK_THROWS_AS(t.char_fn_decay(0.0, zero), Error);
  std::vector<double> huge{1e5};
  try {
    t.char_fn_decay(0.0, huge);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::OscillatoryQuadratureFailure);
  }
}

TEST_CASE("general double-well Psi uses the scanning path") {
  // Same function as the effective quartic with J=2, written as an expression.
  CramerTransform a(PotentialSpec::general("z^4/4 + z^2/2", {0.25, 0.0}), 2.0, 0.1);
  CramerTransform b(PotentialSpec::effective_quartic(2.0), 2.0, 0.1);
  for (double m : {0.0, 0.3, 1.2}) CHECK(a.cramer_transform(m).phi == doctest::Approx(b.cramer_transform(m).phi).epsilon(1e-11));
  // Non-convex effective potential (two modes at sigma = 0).
  CramerTransform c(PotentialSpec::quartic_double_well(), 0.5, 0.1);
  CHECK(std::abs(c.cgf(0.0, 1)) < 1e-12);
  CHECK(c.cgf(0.0, 2) > 0.35);  // bimodal: modes at +-sqrt(1/2)
}

TEST_CASE("memo cache is safe under concurrent use") {
  CramerTransform t(PotentialSpec::effective_quartic(2.0), 2.0, 0.2);
  std::vector<std::thread> pool;
  std::vector<double> out(4 * 20);
  for (int w = 0; w < 4; ++w)
    pool.emplace_back([&, w] {
      for (int i = 0; i < 20; ++i) out[w * 20 + i] = t.cramer_transform(-1.0 + 0.1 * i).phi;
    });
  for (auto& th : pool) th.join();
  for (int w = 1; w < 4; ++w)
    for (int i = 0; i < 20; ++i) CHECK(out[w * 20 + i] == out[i]);
  CHECK(t.cache_size() == 20);
}
