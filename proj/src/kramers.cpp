#include "mfk/kramers.hpp"

#include <array>
#include <cmath>
#include <numbers>

#include "mfk/error.hpp"
#include "mfk/quadrature.hpp"

namespace mfk {

std::optional<double> LogValue::linear() const {
  if (std::abs(log) < 700.0) return std::exp(log);
  return std::nullopt;
}

namespace {

constexpr const char* kOrderN = "1 + O(sqrt(log(N)^3/N))";
constexpr const char* kOrderNEps = "1 + O(sqrt(log(N)^3/N)) + O(eps)";
constexpr const char* kOrderTime = "1 + O(sqrt(log(N)^3/N)) + O(eps); an O(eps^2) variant is also quoted";

double log_eps_factor(const LandscapeSummary& s) { return s.regime == Regime::HighTemperature ? 0.0 : std::log(s.eps); }

void check_n(int N) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "N must be at least 1");
}

}  // namespace

CapacityBound capacity_upper(const LandscapeSummary& s, int N) {
  check_n(N);
  CapacityBound c;
  c.leading.log = log_eps_factor(s) - std::log(2.0 * std::numbers::pi) - N * s.h_zero +
                  0.5 * std::log(std::abs(s.curv_zero)) + 0.5 * std::log(s.phi2_zero);
  c.value = c.leading;
  c.error_orders = kOrderN;
  return c;
}

CapacityBound capacity_lower(const LandscapeSummary& s, int N, std::optional<double> a) {
  CapacityBound c = capacity_upper(s, N);
  if (s.regime == Regime::HighTemperature) {
    c.error_orders = kOrderN;
    if (a) {
      if (!(*a >= 0.0)) throw Error(ErrorCode::InvalidArgument, "constant a must be non-negative");
      c.prefactor = 1.0 / (1.0 + *a);
      c.value.log = c.leading.log - std::log1p(*a);
    }
  } else {
    c.error_orders = kOrderNEps;
  }
  return c;
}

LogValue equilibrium_mass(const LandscapeSummary& s, int N, bool at_plus) {
  check_n(N);
  const double h = at_plus ? s.h_plus : s.h_minus;
  const double curv = at_plus ? s.curv_plus : s.curv_minus;
  const double phi2 = at_plus ? s.phi2_plus : s.phi2_minus;
  return {-N * h + 0.5 * std::log(phi2) - 0.5 * std::log(curv)};
}

LogValue ek_log_time(const LandscapeSummary& s, int N) {
  return {equilibrium_mass(s, N).log - capacity_upper(s, N).value.log};
}

KramersPrediction ek_prediction(const LandscapeSummary& s, const CramerTransform& t, int N) {
  check_n(N);
  if (t.J() != s.J || t.eps() != s.eps)
    throw Error(ErrorCode::InvalidArgument, "landscape summary and Cramer transform disagree on (J, eps)");
  KramersPrediction k;
  k.regime = s.regime;
  k.N = N;
  k.landscape = s;
  k.capacity_upper = capacity_upper(s, N);
  k.capacity_lower = capacity_lower(s, N);
  k.equilibrium_mass = equilibrium_mass(s, N);
  k.mean_time = {k.equilibrium_mass.log - k.capacity_upper.value.log};
  k.error_orders = s.regime == Regime::HighTemperature ? kOrderN : kOrderTime;
  try {
    k.geometry = metastable_geometry(s, N);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::GeometryDegenerate) throw;
  }
  return k;
}

double h_star(const CramerTransform& t, double m, double rho, int N) {
  check_n(N);
  if (!(rho > 0.0)) throw Error(ErrorCode::InvalidArgument, "rho must be positive");
  if (m < -rho || m > rho) throw Error(ErrorCode::InvalidArgument, "h* is defined on [-rho, rho]");
  if (m == -rho) return 1.0;
  if (m == rho) return 0.0;
  const double h0 = hbar(t, 0.0, 0);
  const double k = t.J() / t.eps();
  auto g = [&](double z) {
    const LegendrePoint p = t.cramer_transform(z);
    return std::exp(N * (p.phi - 0.5 * k * z * z - h0)) / std::sqrt(p.d2);
  };
  const quad::Options opt{1e-11, 0.0, 2000};
  const std::array<double, 3> left{-rho, 0.0, rho};
  const double total = quad::integrate_scalar(g, left, opt);
  const double upper = quad::integrate_scalar(g, m, rho, opt);
  return upper / total;
}

RoughBounds rough_bounds(const LandscapeSummary& s, const CramerTransform& t, int N, double poincare,
                         int grid_points) {
  if (s.regime != Regime::HighTemperature)
    throw Error(ErrorCode::InvalidArgument, "rough bounds belong to the high-temperature regime");
  if (!(poincare > 0.0)) throw Error(ErrorCode::InvalidPoincare, "Poincare constant must be positive");
  if (grid_points < 2) throw Error(ErrorCode::InvalidArgument, "rough bounds need at least two grid points");
  RoughBounds r;
  double worst = -1.0;
  for (int i = 0; i < grid_points; ++i) {
    const double m = -s.m_star + 2.0 * s.m_star * i / (grid_points - 1);
    const double sigma = t.cramer_transform(m).sigma;
    const auto& pot = t.potential();
    const double J = t.J();
    const double mean = t.tilted_expectation(sigma, [&](double z) { return pot.effective(z, 2, J); });
    const double var = t.tilted_expectation(sigma, [&](double z) {
      const double d = pot.effective(z, 2, J) - mean;
      return d * d;
    });
    if (var > worst) {
      worst = var;
      r.argmax_m = m;
    }
  }
  r.a = worst / (poincare * poincare);
  r.lower = ek_log_time(s, N);
  r.upper = {r.lower.log + std::log1p(r.a)};
  return r;
}

CapacityCrossCheck capacity_cross_check_1d(const LandscapeSummary& s, const CramerTransform& t) {
  CapacityCrossCheck c;
  const double eta = eta_width(1, s.eps, s.curv_minus);
  c.half_width = s.m_star - eta;
  if (!(c.half_width > 0.0)) throw Error(ErrorCode::GeometryDegenerate, "wells overlap at N = 1");
  const double k = t.J() / t.eps();
  const double h0 = s.h_zero;
  const double root2pi = std::sqrt(2.0 * std::numbers::pi);
  // Weights shifted by e^{Hbar(0)} so they stay O(1) near the saddle.
  auto inv_w = [&](double z) {
    const LegendrePoint p = t.cramer_transform(z);
    return root2pi * std::exp(p.phi - 0.5 * k * z * z - h0) / std::sqrt(p.d2);
  };
  const quad::Options opt{1e-11, 0.0, 2000};
  const double a = c.half_width;
  const std::array<double, 3> br{-a, 0.0, a};
  const double d = quad::integrate_scalar(inv_w, br, opt);
  auto energy = [&](double z) {
    const double dh = inv_w(z) / d;  // |h*'|
    return dh * dh / inv_w(z);       // |h*'|^2 w
  };
  c.dirichlet = t.eps() * quad::integrate_scalar(energy, br, opt) * std::exp(-h0);
  c.formula = std::exp(capacity_upper(s, 1).value.log);

  const double eps = t.eps();
  const double J = t.J();
  const auto& pot = t.potential();
  const double psi0 = pot.site(0.0, 0, J);
  auto boltzmann_inv = [&](double z) { return std::exp((pot.site(z, 0, J) - psi0) / eps); };
  c.exact_microscopic = eps / quad::integrate_scalar(boltzmann_inv, br, opt) * std::exp(-psi0 / eps);

  c.mass_formula = std::exp(equilibrium_mass(s, 1).log);
  const double hm = s.h_minus;
  auto w = [&](double z) {
    const LegendrePoint p = t.cramer_transform(z);
    return std::sqrt(p.d2) / root2pi * std::exp(-(p.phi - 0.5 * k * z * z - hm));
  };
  const std::array<double, 3> well{-s.m_star - eta, -s.m_star, -s.m_star + eta};
  c.mass_quadrature = quad::integrate_scalar(w, well, opt) * std::exp(-hm);
  return c;
}

}  // namespace mfk
