#include "mfk/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mfk/error.hpp"

namespace mfk {

std::string_view to_string(Regime regime) {
  return regime == Regime::LowTemperature ? "LowTemperature" : "HighTemperature";
}

double hbar(const CramerTransform& t, double m, int order) {
  const LegendrePoint p = t.cramer_transform(m);
  const double k = t.J() / t.eps();
  switch (order) {
    case 0: return p.phi - 0.5 * k * m * m;
    case 1: return p.sigma - k * m;
    case 2: return p.d2 - k;
    default: throw Error(ErrorCode::UnsupportedOrder, "hbar order outside 0..2");
  }
}

std::vector<std::pair<double, double>> hbar_curve(const CramerTransform& t, double lo, double hi, int points) {
  std::vector<std::pair<double, double>> out;
  for (int i = 0; i < points; ++i) {
    const double m = lo + (hi - lo) * i / (points - 1);
    out.emplace_back(m, hbar(t, m, 0));
  }
  return out;
}

LandscapeSummary find_critical_points(const CramerTransform& t, Regime regime) {
  if (regime == Regime::LowTemperature && !t.potential().is_quartic())
    throw Error(ErrorCode::InvalidArgument, "the low-temperature regime needs a quartic potential");
  if (regime == Regime::HighTemperature && t.eps() != 1.0)
    throw Error(ErrorCode::InvalidArgument, "the high-temperature regime fixes eps = 1");

  const double k = t.J() / t.eps();
  // g(m) = (phi*)'(J m / eps) - m vanishes exactly at critical points of Hbar.
  auto g = [&](double m) { return t.cgf(k * m, 1) - m; };

  const int nodes = 400;
  const double lo = 1e-3, hi = 4.0;
  std::vector<double> ms(nodes), gs(nodes);
  for (int i = 0; i < nodes; ++i) {
    ms[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (nodes - 1));
    gs[i] = g(ms[i]);
  }
  std::vector<int> changes;
  for (int i = 0; i + 1 < nodes; ++i)
    if ((gs[i] > 0.0) != (gs[i + 1] > 0.0)) changes.push_back(i);
  if (changes.empty())
    throw Error(ErrorCode::NoDoubleWell, "the fixed-point map m = (phi*)'(J m/eps) has no positive root in [1e-3, 4]");
  if (changes.size() > 1) {
    std::ostringstream os;
    os << changes.size() << " sign changes of the fixed-point map";
    throw Error(ErrorCode::MultipleRoots, os.str());
  }

  // Safeguarded Newton inside the bracket.
  double a = ms[changes[0]], b = ms[changes[0] + 1];
  const bool positive_at_a = gs[changes[0]] > 0.0;
  double m = 0.5 * (a + b);
  for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
    const TiltedCumulants c = t.cumulants(k * m);
    const double gv = c.mean - m;
    if (gv == 0.0) break;
    if ((gv > 0.0) == positive_at_a) {
      a = m;
    } else {
      b = m;
    }
    const double slope = c.variance * k - 1.0;
    double next = slope != 0.0 ? m - gv / slope : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    if (std::abs(next - m) < 1e-15) {
      m = next;
      break;
    }
    m = next;
  }
  if (!(b - a <= 1e-8) && std::abs(g(m)) > 1e-10)
    throw Error(ErrorCode::SolverFailure, "critical point bracket did not shrink");

  LandscapeSummary s;
  s.regime = regime;
  s.J = t.J();
  s.eps = t.eps();
  s.m_star = m;
  const LegendrePoint pm = t.cramer_transform(-m), p0 = t.cramer_transform(0.0), pp = t.cramer_transform(m);
  s.h_minus = pm.phi - 0.5 * k * m * m;
  s.h_zero = p0.phi;
  s.h_plus = pp.phi - 0.5 * k * m * m;
  s.curv_minus = pm.d2 - k;
  s.curv_zero = p0.d2 - k;
  s.curv_plus = pp.d2 - k;
  s.phi2_minus = pm.d2;
  s.phi2_zero = p0.d2;
  s.phi2_plus = pp.d2;
  s.barrier = s.h_zero - s.h_minus;
  s.gradient_residual = std::max({std::abs(pm.sigma + k * m), std::abs(p0.sigma), std::abs(pp.sigma - k * m)});
  s.fixed_point_residual = std::abs(g(m));
  if (!(s.curv_zero < 0.0 && s.curv_minus > 0.0 && s.curv_plus > 0.0))
    throw Error(ErrorCode::NoDoubleWell, "curvature sign pattern is not a double well");
  return s;
}

double eta_width(int N, double eps, double curv_minus) {
  return std::sqrt(2.0) * std::sqrt(std::log(N / eps)) / std::sqrt(N * curv_minus);
}

double rho_width(int N, double curv_zero) { return std::sqrt(std::log(static_cast<double>(N))) / std::sqrt(N * std::abs(curv_zero)); }

MetastableGeometry metastable_geometry(const LandscapeSummary& s, int N) {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "N must be at least 1");
  MetastableGeometry g;
  g.N = N;
  g.eta = eta_width(N, s.eps, s.curv_minus);
  g.rho = rho_width(N, s.curv_zero);
  g.lower_level = -s.m_star + g.eta;
  g.upper_level = s.m_star - g.eta;
  if (!(g.eta > 0.0 && g.eta < s.m_star) || !(g.rho > 0.0 && g.rho < s.m_star)) {
    std::ostringstream os;
    os << "eta=" << g.eta << ", rho=" << g.rho << " against m*=" << s.m_star << " at N=" << N;
    throw Error(ErrorCode::GeometryDegenerate, os.str());
  }
  return g;
}

}  // namespace mfk
