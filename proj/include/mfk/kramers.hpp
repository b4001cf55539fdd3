#pragma once

#include <optional>
#include <string>

#include "mfk/cramer.hpp"
#include "mfk/landscape.hpp"

namespace mfk {

// A positive quantity stored by its logarithm.
struct LogValue {
  double log = 0.0;

  // exp(log) when |log| < 700.
  std::optional<double> linear() const;
};

struct CapacityBound {
  LogValue leading;      // the displayed leading-order expression
  double prefactor = 1;  // 1/(1+a) for the high-temperature lower bound, else 1
  LogValue value;        // leading + log(prefactor)
  std::string error_orders;
};

struct KramersPrediction {
  Regime regime = Regime::LowTemperature;
  int N = 1;
  LogValue mean_time;
  CapacityBound capacity_upper;
  CapacityBound capacity_lower;
  LogValue equilibrium_mass;
  std::string error_orders;
  LandscapeSummary landscape;
  // Absent when eta or rho leave (0, m*), e.g. at N = 1.
  std::optional<MetastableGeometry> geometry;
};

LogValue ek_log_time(const LandscapeSummary& s, int N);

KramersPrediction ek_prediction(const LandscapeSummary& s, const CramerTransform& t, int N);

CapacityBound capacity_upper(const LandscapeSummary& s, int N);
// `a` is the high-temperature constant; ignored in the low-temperature regime.
CapacityBound capacity_lower(const LandscapeSummary& s, int N, std::optional<double> a = std::nullopt);

LogValue equilibrium_mass(const LandscapeSummary& s, int N, bool at_plus = false);

// Macroscopic test function: normalized integral of phi''^{-1/2} e^{N Hbar} from m to rho.
double h_star(const CramerTransform& t, double m, double rho, int N);

struct RoughBounds {
  LogValue lower;
  LogValue upper;
  double a = 0.0;
  double argmax_m = 0.0;
};

RoughBounds rough_bounds(const LandscapeSummary& s, const CramerTransform& t, int N, double poincare,
                         int grid_points = 41);

// N = 1, where the macroscopic problem is the whole problem: the capacity between the
// wells on (-half_width, half_width) from the Dirichlet form of h*, from the exact 1D
// formula eps / int e^{psi/eps}, and from the leading-order expression.
struct CapacityCrossCheck {
  double half_width = 0.0;
  double formula = 0.0;
  double dirichlet = 0.0;        // eps * int |h*'|^2 w, w = sqrt(phi''/2pi) e^{-Hbar}
  double exact_microscopic = 0.0;
  double mass_formula = 0.0;     // leading-order well mass at -m*
  double mass_quadrature = 0.0;  // int w over (-m* - eta, -m* + eta)
};

CapacityCrossCheck capacity_cross_check_1d(const LandscapeSummary& s, const CramerTransform& t);

}  // namespace mfk
