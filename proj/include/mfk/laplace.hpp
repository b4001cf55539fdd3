#pragma once

#include "mfk/potentials.hpp"

namespace mfk {

// mantissa * exp(log_scale); keeps e^{-U/eps} factors representable.
struct ScaledValue {
  double mantissa = 0.0;
  double log_scale = 0.0;

  double value() const;
};

enum class Parity { Even, Odd };
enum class Center { Minimizer, TiltedMean };

// U(z) = psi_J(z) - tilt * z at temperature eps and its global minimizer. The asymptotic
// formulas additionally need U''(z_m) > 0.
struct LaplaceProblem {
  PotentialSpec potential;
  double J = 0.0;
  double tilt = 0.0;
  double eps = 0.0;
  double minimizer = 0.0;
  double u_min = 0.0;  // U(z_m)
  double u2 = 0.0;     // U''(z_m)
  double u3 = 0.0;     // U'''(z_m)

  static LaplaceProblem make(const PotentialSpec& potential, double J, double tilt, double eps);

  double U(double z, int order) const;
};

// n!! with (-1)!! = 1; n in -1..20.
double double_factorial(int n);

// Leading-order Laplace value of the moment of (z - z_m)^{2k} (Even) or (z - z_m)^{2k+1} (Odd), k <= 4.
double laplace_moment(const LaplaceProblem& p, int k, Parity parity);
ScaledValue laplace_moment_scaled(const LaplaceProblem& p, int k, Parity parity);

// Integral of (z - c)^power e^{-U/eps} by adaptive quadrature, c the minimizer or the normalized mean.
double quad_oracle(const LaplaceProblem& p, int power, Center center, double rel_tol = 1e-12);
ScaledValue quad_oracle_scaled(const LaplaceProblem& p, int power, Center center, double rel_tol = 1e-12);

// Leading-order ratio of the moment to the partition integral.
double moment_ratio(const LaplaceProblem& p, int k, Parity parity, Center center);

}  // namespace mfk
