#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mfk/expression.hpp"

namespace mfk {

enum class PotentialKind { QuarticDoubleWell, EffectiveQuartic, GeneralSymmetric };

std::string_view to_string(PotentialKind kind);

// U(z) >= alpha z^2 for |z| >= radius.
struct GrowthBound {
  double alpha = 0.0;
  double radius = 0.0;
};

// Psi = Psi_c + Psi_b with Psi_c'' >= convexity and |Psi_b|, |Psi_b'|, |Psi_b''| <= sup_bound.
struct Splitting {
  Expression bounded_part;
  double convexity = 0.0;
  double sup_bound = 0.0;
};

// Force of the form a3 z^3 + a1 z (the single-site SDE force for quartic kinds).
struct CubicForce {
  double a3 = 0.0;
  double a1 = 0.0;
};

class PotentialSpec {
 public:
  // psi(z) = z^4/4 - z^2/2.
  static PotentialSpec quartic_double_well();
  // psi_J(z) = psi(z) + J z^2 / 2.
  static PotentialSpec effective_quartic(double J);
  // A symmetric effective potential Psi given as an expression in z.
  static PotentialSpec general(std::string_view expression, GrowthBound growth,
                               std::optional<Splitting> splitting = std::nullopt);

  PotentialKind kind() const { return kind_; }
  double declared_coupling() const { return coupling_; }
  const std::optional<Expression>& expression() const { return expr_; }
  const std::optional<Splitting>& splitting() const { return splitting_; }
  std::string describe() const;

  // The function the spec names: psi, psi_J or Psi.
  double eval(double z, int order) const;

  // The effective potential entering Gibbs weights at coupling J: psi_J for the
  // quartic kinds (the declared coupling of EffectiveQuartic is ignored in favour
  // of J), and Psi itself for GeneralSymmetric.
  double effective(double z, int order, double J) const;
  // Derivatives 0..4 of the effective potential at once.
  std::array<double, 5> effective_all(double z, double J) const;

  // The single-site potential of the SDE: effective(z) - J z^2 / 2.
  double site(double z, int order, double J) const;

  std::optional<CubicForce> cubic_force(double J) const;

  GrowthBound growth(double J) const;

  bool is_quartic() const { return kind_ != PotentialKind::GeneralSymmetric; }

 private:
  PotentialKind kind_ = PotentialKind::QuarticDoubleWell;
  double coupling_ = 0.0;
  std::optional<Expression> expr_;
  GrowthBound growth_;
  std::optional<Splitting> splitting_;
};

double eval_potential(const PotentialSpec& spec, double z, int order);

enum class ClauseStatus { Pass, Fail, NotEvaluated };

std::string_view to_string(ClauseStatus status);

struct ClauseResult {
  ClauseStatus status = ClauseStatus::NotEvaluated;
  std::string detail;
};

struct AssumptionReport {
  // Clauses (1) to (6), index 0 is clause (1).
  std::array<ClauseResult, 6> clauses;
  double second_moment_ratio = 0.0;  // clause (5) quadrature value, 0 when not evaluated
  double sigma_probe_min = 0.0;      // clause (6) probed tilt range
  double sigma_probe_max = 0.0;

  bool passed() const;
};

struct AssumptionOptions {
  int grid_points = 400;
  double convexity_tolerance = -1e-9;
  std::vector<double> sigma_grid = {-4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0};
};

AssumptionReport check_assumption(const PotentialSpec& spec, double J, const AssumptionOptions& options = {});

}  // namespace mfk
