#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

#include "mfk/potentials.hpp"

namespace mfk {

struct CramerSettings {
  double rel_tol = 1e-13;        // quadrature tolerance relative to the integral of |f|
  double log_drop = 46.0;        // truncate where the shifted log-density falls below -log_drop
  double inversion_tol = 1e-13;  // |(phi*)'(sigma) - m| target of the Legendre inversion
  double xi_cap = 1e4;           // largest |xi| accepted by char_fn_decay
  bool memoize = true;
};

// Cumulants of the tilted measure mu^{eps,sigma} with density e^{sigma z - W(z)} / Z, W = psi_J / eps.
struct TiltedCumulants {
  double sigma = 0.0;
  double log_partition = 0.0;  // phi*(sigma)
  double mean = 0.0;
  double variance = 0.0;
  double third = 0.0;   // third central moment
  double fourth = 0.0;  // fourth central moment
  double truncation_lo = 0.0;
  double truncation_hi = 0.0;
};

struct LegendrePoint {
  double m = 0.0;
  double phi = 0.0;    // phi(m)
  double sigma = 0.0;  // phi'(m)
  double d2 = 0.0;     // phi''(m)
  double d3 = 0.0;     // phi'''(m)
  double residual = 0.0;  // |(phi*)'(sigma) - m|
};

struct TiltedMoments {
  double m = 0.0;
  double sigma = 0.0;
  double mean = 0.0;
  std::array<double, 3> central{};   // k = 2, 3, 4
  double s = 0.0;                    // sqrt((phi*)''(phi'(m)))
  std::array<double, 4> abs_normalized{};  // <|z_hat|^k>, k = 1..4
  double tau = 0.0;                  // eps * phi'(m)
};

struct DecayReport {
  std::vector<double> xi;
  std::vector<double> modulus;
  double c_hat = 0.0;
  bool growing = false;  // c_hat attained at the largest |xi| and still increasing
};

// phi*_eps, its Legendre dual phi_eps and the tilted measures at fixed (potential, J, eps).
// Thread safety: evaluation is const and the memo cache is guarded by a mutex.
class CramerTransform {
 public:
  CramerTransform(PotentialSpec potential, double J, double eps, CramerSettings settings = {});

  const PotentialSpec& potential() const { return potential_; }
  double J() const { return J_; }
  double eps() const { return eps_; }
  const CramerSettings& settings() const { return settings_; }

  double cgf(double sigma, int order) const;
  TiltedCumulants cumulants(double sigma) const;

  LegendrePoint cramer_transform(double m) const;
  TiltedMoments tilted_moments(double m) const;
  DecayReport char_fn_decay(double m, std::span<const double> xi) const;

  // E[f(z)] under mu^{eps,sigma}.
  double tilted_expectation(double sigma, const std::function<double(double)>& f) const;

  std::size_t cache_size() const;

 private:
  struct Window;
  Window window(double sigma) const;
  LegendrePoint invert(double m) const;

  PotentialSpec potential_;
  double J_;
  double eps_;
  CramerSettings settings_;
  mutable std::mutex mutex_;
  mutable std::map<long long, LegendrePoint> cache_;
};

}  // namespace mfk
