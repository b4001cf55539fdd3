#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mfk/cramer.hpp"
#include "mfk/potentials.hpp"

namespace mfk {

// phi_N(m) = -(1/N) log of the fiber integral of prod e^{-psi_J(x_i)/eps} over {Px = m},
// with Hausdorff measure on the fiber (sqrt(N) times Lebesgue measure in N-1 free
// coordinates). N = 1 uses counting measure on the single point.
struct HyperplaneIntegral {
  int N = 1;
  double m = 0.0;
  double value = 0.0;
  double error = 0.0;  // estimated absolute error of value
  bool flagged = false;  // error above the requested tolerance
};

HyperplaneIntegral phi_N_small(const PotentialSpec& spec, double J, double eps, int N, double m,
                               double rel_tol = 1e-11);

// E over the fiber measure mu_m of b(x_0).
double fiber_expectation(const PotentialSpec& spec, double J, double eps, int N, double m,
                         const std::function<double(double)>& b, double rel_tol = 1e-11);

// Integral of the fiber density normalized by e^{N phi_N(m)}: 1 up to quadrature error.
double fiber_normalization(const PotentialSpec& spec, double J, double eps, int N, double m);

struct CramerVerificationRow {
  int N = 0;
  double m = 0.0;
  double phi_N = 0.0;
  double phi = 0.0;
  double phi2 = 0.0;
  double ratio = 0.0;      // e^{-N phi_N} / (e^{-N phi} sqrt(phi''/2pi))
  double deviation = 0.0;  // |ratio - 1|
};

// max_m deviation(N) * sqrt(N) per N, and whether max/min over N stays within `band`.
struct ScalingCheck {
  std::vector<int> Ns;
  std::vector<double> max_deviation;
  std::vector<double> scaled;
  double band_ratio = 0.0;
  double band = 2.0;
  bool within_band = false;
};

struct CramerVerificationReport {
  double J = 0.0, eps = 0.0;
  std::vector<CramerVerificationRow> rows;
  ScalingCheck scaling;
};

CramerVerificationReport verify_local_cramer(const PotentialSpec& spec, double J, double eps, std::span<const int> Ns,
                                             std::span<const double> m_grid, int threads = 1);

struct ObservableRow {
  int N = 0;
  double m = 0.0;
  double fiber = 0.0;
  double tilted = 0.0;
  double gap = 0.0;
};

struct ObservableReport {
  std::string observable;
  double J = 0.0, eps = 0.0;
  std::vector<ObservableRow> rows;
  ScalingCheck scaling;
};

ObservableReport verify_equiv_observables(const PotentialSpec& spec, double J, double eps, std::span<const int> Ns,
                                          const std::function<double(double)>& b, const std::string& name,
                                          std::span<const double> m_grid, int threads = 1);

ScalingCheck sqrt_n_scaling(std::span<const int> Ns, std::span<const double> max_deviation, double band = 2.0);

}  // namespace mfk
