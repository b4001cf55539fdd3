#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include "mfk/cramer.hpp"

namespace mfk {

enum class Regime { LowTemperature, HighTemperature };

std::string_view to_string(Regime regime);

struct LandscapeSummary {
  Regime regime = Regime::LowTemperature;
  double J = 0.0;
  double eps = 0.0;
  double m_star = 0.0;
  double h_minus = 0.0;  // Hbar(-m*)
  double h_zero = 0.0;   // Hbar(0)
  double h_plus = 0.0;   // Hbar(m*)
  double curv_minus = 0.0;
  double curv_zero = 0.0;
  double curv_plus = 0.0;
  double phi2_minus = 0.0;  // phi''(-m*)
  double phi2_zero = 0.0;   // phi''(0)
  double phi2_plus = 0.0;
  double barrier = 0.0;     // Hbar(0) - Hbar(-m*)
  double gradient_residual = 0.0;     // max |Hbar'| over the three critical points
  double fixed_point_residual = 0.0;  // |m* - (phi*)'(J m*/eps)|
};

struct MetastableGeometry {
  int N = 1;
  double eta = 0.0;
  double rho = 0.0;
  double lower_level = 0.0;  // -m* + eta, boundary of B-
  double upper_level = 0.0;  // m* - eta, boundary of B+
};

// Hbar(m) = phi(m) - J m^2 / (2 eps) and its first two derivatives.
double hbar(const CramerTransform& t, double m, int order);

std::vector<std::pair<double, double>> hbar_curve(const CramerTransform& t, double lo, double hi, int points);

LandscapeSummary find_critical_points(const CramerTransform& t, Regime regime);

double eta_width(int N, double eps, double curv_minus);
double rho_width(int N, double curv_zero);

MetastableGeometry metastable_geometry(const LandscapeSummary& s, int N);

}  // namespace mfk
