#include <cmath>
#include <cstring>
#include <vector>

#include "doctest.h"
#include "mfk/error.hpp"
#include "mfk/simulate.hpp"

using namespace mfk;

namespace {

SimulationConfig base(int N, double eps, double dt = 1e-3) {
  SimulationConfig c;
  c.N = N;
  c.J = 2.0;
  c.eps = eps;
  c.dt = dt;
  c.seed = 42;
  c.max_steps = 2000000;
  c.init = InitSpec{InitKind::Deterministic, -0.9, 0};
  c.target = 0.9;
  return c;
}

bool same(const TransitionSample& a, const TransitionSample& b) {
  return a.trajectory == b.trajectory && a.steps == b.steps && a.crossed == b.crossed &&
         std::memcmp(&a.hitting_time, &b.hitting_time, sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("microscopic Hamiltonian values") {
  const auto spec = PotentialSpec::quartic_double_well();
  std::vector<double> zero(5, 0.0), ones(7, 1.0);
  CHECK(microscopic_hamiltonian(zero, 2.0, 1.0, spec) == 0.0);
  CHECK(microscopic_hamiltonian(ones, 2.0, 1.0, spec) == doctest::Approx(-0.25 * 7));
  std::vector<double> bad{0.0, NAN};
  CHECK_THROWS_WITH_AS(microscopic_hamiltonian(bad, 2.0, 1.0, spec), doctest::Contains("NonFinite"), Error);
}

TEST_CASE("gradient against central differences") {
  const auto spec = PotentialSpec::quartic_double_well();
  uint64_t s = 12345;
  auto next = [&] {
    s = s * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>(s >> 11) / 9007199254740992.0 * 3.0 - 1.5;
  };
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(4);
    for (auto& v : x) v = next();
    const auto g = microscopic_gradient(x, 1.7, 0.3, spec);
    for (size_t i = 0; i < x.size(); ++i) {
      const double h = 1e-6;
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (microscopic_hamiltonian(xp, 1.7, 0.3, spec) - microscopic_hamiltonian(xm, 1.7, 0.3, spec)) / (2 * h);
      CHECK(std::abs(fd - g[i]) <= 1e-6 * std::max(1.0, std::abs(g[i])));
    }
  }
}

TEST_CASE("no noise means no crossing") {
  auto c = base(3, 0.0);
  c.init.m0 = -1.0;
  c.max_steps = 5000;
  auto t = simulate_trajectory(c);
  CHECK_FALSE(t.crossed);
  CHECK(t.steps == 5000);
}

TEST_CASE("starting past the level crosses at time zero") {
  auto c = base(2, 0.5);
  c.init.m0 = c.target;
  auto t = simulate_trajectory(c);
  CHECK(t.crossed);
  CHECK(t.hitting_time == 0.0);
  CHECK(t.steps == 0);
}

TEST_CASE("trajectories are reproducible and independent of batching") {
  auto c = base(2, 0.5);
  auto a = simulate_trajectory(c);
  auto b = simulate_trajectory(c);
  CHECK(same(a, b));
  CHECK(a.crossed);
  CHECK(a.hitting_time > (a.steps - 1) * c.dt);
  CHECK(a.hitting_time <= a.steps * c.dt);

  auto batch = simulate_trajectories(c, 0, 21);
  CHECK(same(batch[0], a));
  auto tail = simulate_trajectories(c, 17, 4);
  for (int j = 0; j < 4; ++j) CHECK(same(tail[j], batch[17 + j]));

  auto other = c;
  other.seed = 43;
  CHECK_FALSE(same(simulate_trajectory(other), a));
}

TEST_CASE("estimate is identical for any thread count") {
  auto c = base(2, 0.5, 2e-3);
  c.init = InitSpec{InitKind::HyperplaneConditioned, -0.9, 500};
  auto one = estimate_transition_time(c, 150, 1);
  auto three = estimate_transition_time(c, 150, 3);
  REQUIRE(one.samples.size() == 150);
  for (int j = 0; j < 150; ++j) CHECK(same(one.samples[j], three.samples[j]));
  CHECK(one.mean == three.mean);
  CHECK(one.ci_low < one.mean);
  CHECK(one.ci_high > one.mean);
  CHECK(one.crossed + one.timeouts == 150);
}

TEST_CASE("budget, timeouts and configuration errors") {
  auto c = base(2, 0.5);
  CHECK_THROWS_WITH_AS(estimate_transition_time(c, 0), doctest::Contains("InvalidBudget"), Error);
  auto frozen = c;
  frozen.eps = 0.0;
  frozen.max_steps = 100;
  CHECK_THROWS_WITH_AS(estimate_transition_time(frozen, 5), doctest::Contains("AllTimedOut"), Error);

  auto coarse = c;
  coarse.dt = 0.05;
  CHECK_THROWS_WITH_AS(validate(coarse), doctest::Contains("stability guard"), Error);
  auto general = c;
  general.potential = PotentialSpec::general("cosh(z)", {0.1, 1.0});
  CHECK_THROWS_WITH_AS(validate(general), doctest::Contains("ConfigInvalid"), Error);
  auto no_burn = c;
  no_burn.init = InitSpec{InitKind::HyperplaneConditioned, -0.9, 0};
  CHECK_THROWS_AS(validate(no_burn), Error);

  auto tight = c;
  tight.state_bound = 0.5;
  CHECK_THROWS_WITH_AS(simulate_trajectory(tight), doctest::Contains("NumericBlowup"), Error);
}

TEST_CASE("projected sampler conserves the mean") {
  auto c = base(3, 0.5);
  c.init.burn_in_steps = 1000;
  const double m = 0.3;
  auto xs = sample_hyperplane(c, m, 100000);
  REQUIRE(xs.size() == 100000);
  double worst = 0.0;
  for (const auto& x : xs) worst = std::max(worst, std::abs((x[0] + x[1] + x[2]) / 3.0 - m));
  CHECK(worst <= 1e-12);
}

TEST_CASE("projected sampler reproduces the fiber second moment") {
  // mpmath: E[x0^2] on x0 + x1 = 0 under exp(-(psi_2(x0) + psi_2(x1)) / 0.5).
  const double oracle = 0.172564749073454934577167421962;
  auto c = base(2, 0.5, 5e-4);
  c.init.burn_in_steps = 4000;
  const int batches = 50, per = 2000;
  auto xs = sample_hyperplane(c, 0.0, batches * per, 10);
  std::vector<double> bm(batches, 0.0);
  for (int b = 0; b < batches; ++b) {
    for (int k = 0; k < per; ++k) bm[b] += xs[b * per + k][0] * xs[b * per + k][0];
    bm[b] /= per;
  }
  double mean = 0.0, var = 0.0;
  for (double v : bm) mean += v / batches;
  for (double v : bm) var += (v - mean) * (v - mean) / (batches - 1);
  const double se = std::sqrt(var / batches);
  CHECK(std::abs(mean - oracle) <= 3.0 * se);
}

TEST_CASE("two-sample KS statistic") {
  std::vector<double> a{1, 2, 3, 4}, b{1, 2, 3, 4}, c{10, 11, 12, 13};
  CHECK(two_sample_ks(a, b).statistic == 0.0);
  CHECK(two_sample_ks(a, c).statistic == 1.0);
  std::vector<double> lo(50), hi(50);
  for (int i = 0; i < 50; ++i) {
    lo[i] = i;
    hi[i] = i + 25;
  }
  CHECK(two_sample_ks(lo, hi).statistic == doctest::Approx(0.5));
  CHECK_FALSE(two_sample_ks(lo, hi).pass);
  CHECK(two_sample_ks({1, 3}, {2, 4}).statistic == doctest::Approx(0.5));
}

TEST_CASE("J = 0 factorization of first-coordinate hitting times") {
  SimulationConfig c = base(3, 0.5, 2e-3);
  c.J = 0.0;
  c.init.m0 = -1.0;
  c.target = 0.0;
  c.observable = Observable::FirstCoordinate;
  auto many = estimate_transition_time(c, 500);
  SimulationConfig single = c;
  single.N = 1;
  single.seed = 4242;
  auto one = estimate_transition_time(single, 500);
  std::vector<double> a, b;
  for (const auto& s : many.samples) a.push_back(s.hitting_time);
  for (const auto& s : one.samples) b.push_back(s.hitting_time);
  const auto ks = two_sample_ks(a, b);
  CAPTURE(ks.statistic);
  CHECK(ks.pass);
}

TEST_CASE("transition CSV layout") {
  std::vector<TransitionSample> s{{0, 42, 10, 0.0095, true}, {1, 42, 100, 0.1, false}};
  CHECK(transitions_csv(s) == "trajectory,seed,steps,hitting_time,crossed\n0,42,10,0.0095,true\n1,42,100,0.1,false\n");
  CHECK(transitions_csv({}) == "trajectory,seed,steps,hitting_time,crossed\n");
}
