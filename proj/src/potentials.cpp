#include "mfk/potentials.hpp"

#include <cmath>
#include <sstream>

#include "log_window.hpp"
#include "mfk/error.hpp"
#include "mfk/quadrature.hpp"

namespace mfk {

std::string_view to_string(PotentialKind kind) {
  switch (kind) {
    case PotentialKind::QuarticDoubleWell: return "QuarticDoubleWell";
    case PotentialKind::EffectiveQuartic: return "EffectiveQuartic";
    case PotentialKind::GeneralSymmetric: return "GeneralSymmetric";
  }
  return "Unknown";
}

std::string_view to_string(ClauseStatus status) {
  switch (status) {
    case ClauseStatus::Pass: return "pass";
    case ClauseStatus::Fail: return "fail";
    case ClauseStatus::NotEvaluated: return "not_evaluated";
  }
  return "unknown";
}

namespace {

void check_order(int order) {
  if (order < 0 || order > 4)
    throw Error(ErrorCode::UnsupportedOrder, "derivative order " + std::to_string(order) + " outside 0..4");
}

// Derivatives of z^4/4 + c z^2/2.
double quartic(double z, int order, double c) {
  switch (order) {
    case 0: {
      double z2 = z * z;
      return 0.25 * z2 * z2 + 0.5 * c * z2;
    }
    case 1: return z * z * z + c * z;
    case 2: return 3.0 * z * z + c;
    case 3: return 6.0 * z;
    default: return 6.0;
  }
}

}  // namespace

PotentialSpec PotentialSpec::quartic_double_well() {
  PotentialSpec s;
  s.kind_ = PotentialKind::QuarticDoubleWell;
  return s;
}

PotentialSpec PotentialSpec::effective_quartic(double J) {
  if (!(J > 0.0)) throw Error(ErrorCode::InvalidArgument, "EffectiveQuartic needs J > 0");
  PotentialSpec s;
  s.kind_ = PotentialKind::EffectiveQuartic;
  s.coupling_ = J;
  return s;
}

PotentialSpec PotentialSpec::general(std::string_view expression, GrowthBound growth,
                                     std::optional<Splitting> splitting) {
  if (!(growth.alpha > 0.0) || !(growth.radius >= 0.0))
    throw Error(ErrorCode::InvalidArgument, "growth bound needs alpha > 0 and radius >= 0");
  PotentialSpec s;
  s.kind_ = PotentialKind::GeneralSymmetric;
  s.expr_ = Expression::parse(expression);
  s.growth_ = growth;
  s.splitting_ = std::move(splitting);
  return s;
}

std::string PotentialSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind_);
  if (kind_ == PotentialKind::EffectiveQuartic) os << "(J=" << coupling_ << ")";
  if (expr_) os << "(" << expr_->text() << ")";
  return os.str();
}

double PotentialSpec::eval(double z, int order) const {
  check_order(order);
  switch (kind_) {
    case PotentialKind::QuarticDoubleWell: return quartic(z, order, -1.0);
    case PotentialKind::EffectiveQuartic: return quartic(z, order, coupling_ - 1.0);
    case PotentialKind::GeneralSymmetric: return expr_->derivatives(z)[order];
  }
  return 0.0;
}

double PotentialSpec::effective(double z, int order, double J) const {
  check_order(order);
  if (is_quartic()) return quartic(z, order, J - 1.0);
  return expr_->derivatives(z)[order];
}

std::array<double, 5> PotentialSpec::effective_all(double z, double J) const {
  if (is_quartic()) {
    const double c = J - 1.0;
    return {quartic(z, 0, c), quartic(z, 1, c), quartic(z, 2, c), quartic(z, 3, c), 6.0};
  }
  return expr_->derivatives(z);
}

double PotentialSpec::site(double z, int order, double J) const {
  double v = effective(z, order, J);
  if (order == 0) return v - 0.5 * J * z * z;
  if (order == 1) return v - J * z;
  if (order == 2) return v - J;
  return v;
}

std::optional<CubicForce> PotentialSpec::cubic_force(double J) const {
  if (is_quartic()) return CubicForce{1.0, -1.0};
  // Psi' = b3 z^3 + b1 z exactly?
  const double b1 = expr_->derivatives(0.0)[2];
  const double b3 = expr_->derivatives(0.0)[4] / 6.0;
  for (double z : {0.125, 0.5, 1.0, 1.5, 2.0, 3.0, -0.75, -2.5}) {
    double d = expr_->derivatives(z)[1];
    double model = b3 * z * z * z + b1 * z;
    if (!(std::abs(d - model) <= 1e-12 * (1.0 + std::abs(d)))) return std::nullopt;
  }
  return CubicForce{b3, b1 - J};
}

GrowthBound PotentialSpec::growth(double J) const {
  if (is_quartic()) {
    // z^4/4 + (J-1) z^2/2 >= z^2/4 once z^2 >= 3 - 2J.
    return GrowthBound{0.25, std::sqrt(std::max(0.0, 3.0 - 2.0 * J))};
  }
  return growth_;
}

double eval_potential(const PotentialSpec& spec, double z, int order) { return spec.eval(z, order); }

bool AssumptionReport::passed() const {
  for (const auto& c : clauses)
    if (c.status == ClauseStatus::Fail) return false;
  return true;
}

namespace {

// E[f] under e^{sigma z - Psi(z)} / Z at temperature 1.
template <class F>
double tilted_mean_of(const PotentialSpec& spec, double J, double sigma, F&& f) {
  const GrowthBound g = spec.growth(J);
  auto logf = [&](double z) {
    auto d = spec.effective_all(z, J);
    return std::array<double, 3>{sigma * z - d[0], sigma - d[1], -d[2]};
  };
  const double f0 = logf(0.0)[0];
  const double drop = 46.0;
  auto w = detail::log_window(logf, detail::tail_reach(sigma, 1.0, g.alpha, g.radius, f0, drop), drop);
  auto integrand = [&](double z) {
    double p = std::exp(logf(z)[0] - w.log_max);
    return std::array<double, 2>{p, p * f(z)};
  };
  auto r = quad::integrate<2>(integrand, w.breaks, {1e-12, 0.0, 4000});
  return r.value[1] / r.value[0];
}

}  // namespace

AssumptionReport check_assumption(const PotentialSpec& spec, double J, const AssumptionOptions& options) {
  if (!(J > 0.0)) throw Error(ErrorCode::InvalidArgument, "coupling J must be positive");
  AssumptionReport report;
  const GrowthBound g = spec.growth(J);
  const double reach = 4.0 * std::max(g.radius, 1.0);

  // Geometric grid on (0, reach] with 0 prepended.
  std::vector<double> grid{0.0};
  const int n = std::max(options.grid_points, 8);
  const double z_min = reach * 1e-4;
  const double ratio = std::pow(reach / z_min, 1.0 / (n - 1));
  for (int i = 0; i < n; ++i) grid.push_back(z_min * std::pow(ratio, i));

  auto psi = [&](double z, int k) { return spec.effective(z, k, J); };
  auto bounded = [&](double z, int k) -> double {
    if (spec.splitting()) return spec.splitting()->bounded_part.derivatives(z)[k];
    return 0.0;
  };

  // (1) splitting bounds.
  {
    auto& c = report.clauses[0];
    std::optional<double> convexity, sup_bound;
    if (spec.splitting()) {
      convexity = spec.splitting()->convexity;
      sup_bound = spec.splitting()->sup_bound;
    } else if (spec.is_quartic()) {
      convexity = J - 1.0;
      sup_bound = 0.0;
    }
    if (!convexity) {
      c = {ClauseStatus::NotEvaluated, "no splitting supplied"};
    } else if (!(*convexity > 0.0)) {
      c = {ClauseStatus::Fail, "convexity bound of Psi_c is not positive"};
    } else {
      double min_curv = std::numeric_limits<double>::infinity();
      double max_b = 0.0;
      for (double z0 : grid)
        for (double z : {z0, -z0}) {
          min_curv = std::min(min_curv, psi(z, 2) - bounded(z, 2));
          for (int k = 0; k <= 2; ++k) max_b = std::max(max_b, std::abs(bounded(z, k)));
        }
      bool ok = min_curv >= *convexity - 1e-9 * (1.0 + *convexity) && max_b <= *sup_bound + 1e-9;
      std::ostringstream os;
      os << "min Psi_c''=" << min_curv << " (c=" << *convexity << "), max |Psi_b|_C2=" << max_b
         << " (c'=" << *sup_bound << ")";
      c = {ok ? ClauseStatus::Pass : ClauseStatus::Fail, os.str()};
    }
  }

  // (2) symmetry.
  {
    double worst = 0.0;
    for (double z : grid) worst = std::max(worst, std::abs(psi(z, 0) - psi(-z, 0)) / (1.0 + std::abs(psi(z, 0))));
    std::ostringstream os;
    os << "max relative asymmetry " << worst;
    report.clauses[1] = {worst <= 1e-12 ? ClauseStatus::Pass : ClauseStatus::Fail, os.str()};
  }

  // (3) Psi' convex on [0, inf): second divided differences of Psi'.
  {
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
      double z0 = grid[i - 1], z1 = grid[i], z2 = grid[i + 1];
      double s01 = (psi(z1, 1) - psi(z0, 1)) / (z1 - z0);
      double s12 = (psi(z2, 1) - psi(z1, 1)) / (z2 - z1);
      worst = std::min(worst, 2.0 * (s12 - s01) / (z2 - z0));
    }
    std::ostringstream os;
    os << "min second difference of Psi' " << worst;
    report.clauses[2] = {worst >= options.convexity_tolerance ? ClauseStatus::Pass : ClauseStatus::Fail, os.str()};
  }

  // (4) quadratic Psi_c needs c_Psi > J.
  {
    bool quadratic = true;
    for (double z0 : grid)
      for (double z : {z0, -z0}) {
        double d3 = psi(z, 3) - bounded(z, 3);
        double d4 = psi(z, 4) - bounded(z, 4);
        double scale = 1.0 + std::abs(psi(z, 2));
        if (std::abs(d3) > 1e-12 * scale || std::abs(d4) > 1e-12 * scale) quadratic = false;
      }
    if (!quadratic) {
      report.clauses[3] = {ClauseStatus::Pass, "Psi_c is not quadratic"};
    } else {
      double c_psi = 0.5 * (psi(0.0, 2) - bounded(0.0, 2));
      std::ostringstream os;
      os << "Psi_c quadratic with c_Psi=" << c_psi << ", J=" << J;
      report.clauses[3] = {c_psi > J ? ClauseStatus::Pass : ClauseStatus::Fail, os.str()};
    }
  }

  // (5) 1/J < <z^2> under e^{-Psi}.
  if (spec.is_quartic()) {
    report.clauses[4] = {ClauseStatus::NotEvaluated, "high-temperature condition; not used for the quartic family"};
  } else {
    double r = tilted_mean_of(spec, J, 0.0, [](double z) { return z * z; });
    report.second_moment_ratio = r;
    std::ostringstream os;
    os << "second-moment ratio " << r << " vs 1/J=" << 1.0 / J;
    report.clauses[4] = {1.0 / J < r ? ClauseStatus::Pass : ClauseStatus::Fail, os.str()};
  }

  // (6) sigma -> E_sigma[(Psi'')^2] finite on the probed grid.
  {
    double worst = 0.0;
    bool finite = true;
    for (double s : options.sigma_grid) {
      double v = tilted_mean_of(spec, J, s, [&](double z) {
        double d2 = psi(z, 2);
        return d2 * d2;
      });
      finite = finite && std::isfinite(v);
      worst = std::max(worst, v);
    }
    if (!options.sigma_grid.empty()) {
      auto [lo, hi] = std::minmax_element(options.sigma_grid.begin(), options.sigma_grid.end());
      report.sigma_probe_min = *lo;
      report.sigma_probe_max = *hi;
    }
    std::ostringstream os;
    os << "max tilted second moment of Psi'' " << worst << " on sigma in [" << report.sigma_probe_min << ", "
       << report.sigma_probe_max << "]";
    report.clauses[5] = {finite ? ClauseStatus::Pass : ClauseStatus::Fail, os.str()};
  }
  return report;
}

}  // namespace mfk
