#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <thread>

#include <spdlog/spdlog.h>

#include "mfk/app.hpp"
#include "mfk/error.hpp"
#include "mfk/exactsmall.hpp"
#include "mfk/expression.hpp"
#include "mfk/kramers.hpp"
#include "mfk/laplace.hpp"
#include "mfk/simulate.hpp"

namespace mfk::app {

namespace {

// Computation paths: leading-order asymptotic expressions, numerically exact
// references (quadrature and Legendre inversion), and Monte Carlo.
constexpr const char* kFormula = "formula";
constexpr const char* kOracle = "oracle";
constexpr const char* kMc = "mc";

Json tag(double v, const char* path) {
  Json j;
  j["value"] = std::isfinite(v) ? Json(v) : Json(nullptr);
  j["path"] = path;
  return j;
}

Json tag_log(const LogValue& v, const char* path) {
  Json j;
  j["log"] = v.log;
  const auto lin = v.linear();
  j["value"] = lin ? Json(*lin) : Json(nullptr);
  j["path"] = path;
  return j;
}

Json error_json(const std::exception& e) {
  Json j;
  if (auto p = dynamic_cast<const Error*>(&e)) j["code"] = std::string(to_string(p->code()));
  else j["code"] = "Internal";
  j["message"] = e.what();
  return j;
}

template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  std::atomic<int> cursor{0};
  auto worker = [&] {
    for (int i = cursor++; i < count; i = cursor++) fn(i);
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::clamp(threads, 1, std::max(count, 1)); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

PotentialSpec make_potential(const ExperimentConfig& c) {
  if (c.potential == "quartic") return PotentialSpec::quartic_double_well();
  if (c.potential == "effective_quartic") return PotentialSpec::effective_quartic(c.J);
  return PotentialSpec::general(c.expression, GrowthBound{c.growth_alpha, c.growth_radius});
}

Regime regime_of(const ExperimentConfig& c) { return c.regime == "high" ? Regime::HighTemperature : Regime::LowTemperature; }

struct Context {
  const ExperimentConfig& cfg;
  uint64_t seed;
  int threads;
  PotentialSpec spec;
  std::optional<CramerTransform> transform;
  std::optional<LandscapeSummary> summary;
  std::vector<std::optional<KramersPrediction>> predictions;  // per config N
  std::vector<std::pair<std::string, std::string>> files;
};

const CramerTransform& transform(Context& ctx) {
  if (!ctx.transform) ctx.transform.emplace(ctx.spec, ctx.cfg.J, ctx.cfg.eps);
  return *ctx.transform;
}

const LandscapeSummary& summary(Context& ctx) {
  if (!ctx.summary) ctx.summary = find_critical_points(transform(ctx), regime_of(ctx.cfg));
  return *ctx.summary;
}

Json landscape_json(const LandscapeSummary& s, const CramerTransform& t, const ExperimentConfig& c) {
  Json j;
  j["regime"] = std::string(to_string(s.regime));
  j["m_star"] = tag(s.m_star, kOracle);
  j["barrier"] = tag(s.barrier, kOracle);
  j["hbar_minus"] = tag(s.h_minus, kOracle);
  j["hbar_zero"] = tag(s.h_zero, kOracle);
  j["hbar_plus"] = tag(s.h_plus, kOracle);
  j["curvature_minus"] = tag(s.curv_minus, kOracle);
  j["curvature_zero"] = tag(s.curv_zero, kOracle);
  j["curvature_plus"] = tag(s.curv_plus, kOracle);
  j["phi2_minus"] = tag(s.phi2_minus, kOracle);
  j["phi2_zero"] = tag(s.phi2_zero, kOracle);
  j["phi2_plus"] = tag(s.phi2_plus, kOracle);
  j["gradient_residual"] = tag(s.gradient_residual, kOracle);
  j["fixed_point_residual"] = tag(s.fixed_point_residual, kOracle);
  Json curve;
  curve["path"] = kOracle;
  std::vector<double> ms, hs;
  for (const auto& [m, h] : hbar_curve(t, -c.landscape_range, c.landscape_range, c.landscape_points)) {
    ms.push_back(m);
    hs.push_back(h);
  }
  curve["m"] = ms;
  curve["hbar"] = hs;
  j["curve"] = std::move(curve);
  return j;
}

Json capacity_json(const CapacityBound& b) {
  Json j;
  j["leading"] = tag_log(b.leading, kFormula);
  j["prefactor"] = tag(b.prefactor, kFormula);
  j["value"] = tag_log(b.value, kFormula);
  j["error_orders"] = b.error_orders;
  return j;
}

Json prediction_json(const KramersPrediction& k, const std::optional<RoughBounds>& rough) {
  Json j;
  j["N"] = k.N;
  j["mean_time"] = tag_log(k.mean_time, kFormula);
  j["capacity_upper"] = capacity_json(k.capacity_upper);
  j["capacity_lower"] = capacity_json(k.capacity_lower);
  j["equilibrium_mass"] = tag_log(k.equilibrium_mass, kFormula);
  j["error_orders"] = k.error_orders;
  if (k.geometry) {
    Json g;
    g["eta"] = tag(k.geometry->eta, kFormula);
    g["rho"] = tag(k.geometry->rho, kFormula);
    g["lower_level"] = tag(k.geometry->lower_level, kFormula);
    g["upper_level"] = tag(k.geometry->upper_level, kFormula);
    j["geometry"] = std::move(g);
  } else {
    j["geometry"] = nullptr;
  }
  if (rough) {
    Json r;
    r["lower"] = tag_log(rough->lower, kFormula);
    r["upper"] = tag_log(rough->upper, kFormula);
    r["a"] = tag(rough->a, kOracle);
    r["argmax_m"] = tag(rough->argmax_m, kOracle);
    j["rough_bounds"] = std::move(r);
  }
  return j;
}

// Stage bodies return the result object and set `partial` when some N entries failed.

Json run_landscape(Context& ctx, bool&) { return landscape_json(summary(ctx), transform(ctx), ctx.cfg); }

Json run_predict(Context& ctx, bool& partial) {
  const auto& s = summary(ctx);
  const auto& t = transform(ctx);
  const auto& Ns = ctx.cfg.N;
  std::vector<Json> entries(Ns.size());
  ctx.predictions.assign(Ns.size(), std::nullopt);
  parallel_for(static_cast<int>(Ns.size()), ctx.threads, [&](int i) {
    try {
      KramersPrediction k = ek_prediction(s, t, Ns[i]);
      std::optional<RoughBounds> rough;
      if (s.regime == Regime::HighTemperature) {
        rough = rough_bounds(s, t, Ns[i], ctx.cfg.poincare);
        k.capacity_lower = capacity_lower(s, Ns[i], rough->a);
      }
      entries[i] = prediction_json(k, rough);
      ctx.predictions[i] = std::move(k);
    } catch (const std::exception& e) {
      Json j;
      j["N"] = Ns[i];
      j["error"] = error_json(e);
      entries[i] = std::move(j);
    }
  });
  Json out = Json::array();
  for (size_t i = 0; i < Ns.size(); ++i) {
    if (!ctx.predictions[i]) partial = true;
    out.push_back(std::move(entries[i]));
  }
  Json j;
  j["predictions"] = std::move(out);
  return j;
}

Json estimate_json(const TransitionEstimate& e, double dt, uint64_t seed) {
  Json j;
  j["dt"] = dt;
  j["seed"] = seed;
  j["requested"] = e.requested;
  j["crossed"] = e.crossed;
  j["timeouts"] = e.timeouts;
  j["timeout_warning"] = e.timeout_warning;
  j["mean"] = tag(e.mean, kMc);
  j["sd"] = tag(e.sd, kMc);
  j["se"] = tag(e.se, kMc);
  j["ci_low"] = tag(e.ci_low, kMc);
  j["ci_high"] = tag(e.ci_high, kMc);
  return j;
}

Json simulate_one(Context& ctx, size_t i) {
  const auto& c = ctx.cfg;
  const auto& s = summary(ctx);
  const KramersPrediction& k = *ctx.predictions[i];
  const int N = c.N[i];

  double eta = 0.0;
  if (c.sim_level == "asymptotic") eta = metastable_geometry(s, N).eta;  // throws GeometryDegenerate

  SimulationConfig sim;
  sim.N = N;
  sim.J = c.J;
  sim.eps = c.eps;
  sim.potential = ctx.spec;
  sim.dt = c.sim_dt;
  sim.seed = ctx.seed;
  sim.state_bound = c.sim_state_bound;
  sim.target = s.m_star - eta;
  const InitKind kind = c.sim_init == "hyperplane" ? InitKind::HyperplaneConditioned : InitKind::Deterministic;
  sim.init = InitSpec{kind, -s.m_star + eta, c.sim_burn_in};
  // Budget: 50 predicted mean times, capped by the configured ceiling.
  const double budget = 50.0 * std::exp(std::min(k.mean_time.log, 300.0)) / c.sim_dt;
  sim.max_steps = static_cast<int64_t>(std::min(budget, static_cast<double>(c.sim_max_steps_ceiling)));
  sim.max_steps = std::max<int64_t>(sim.max_steps, 1);

  spdlog::debug("simulate N={}: level {} -> {}, dt {}, {} transitions", N, sim.init.m0, sim.target, sim.dt,
               c.sim_transitions);
  const TransitionEstimate main = estimate_transition_time(sim, c.sim_transitions, ctx.threads);
  ctx.files.emplace_back("transitions_N" + std::to_string(N) + ".csv", transitions_csv(main.samples));

  Json j;
  j["N"] = N;
  j["level_policy"] = c.sim_level;
  j["eta"] = tag(eta, kFormula);
  j["start_level"] = tag(sim.init.m0, kFormula);
  j["target_level"] = tag(sim.target, kFormula);
  j["init"] = c.sim_init;
  j["burn_in_steps"] = c.sim_burn_in;
  j["max_steps"] = sim.max_steps;
  j["estimate"] = estimate_json(main, sim.dt, sim.seed);
  j["prediction"] = tag_log(k.mean_time, kFormula);
  const double ratio = main.mean / std::exp(k.mean_time.log);
  j["ratio"] = tag(ratio, kMc);
  j["within_factor3"] = std::isfinite(ratio) && ratio >= 1.0 / 3.0 && ratio <= 3.0;

  if (c.sim_dt_halving) {
    SimulationConfig half = sim;
    half.dt = sim.dt / 2;
    half.seed = sim.seed + 1;
    half.max_steps = sim.max_steps > INT64_MAX / 2 ? INT64_MAX : 2 * sim.max_steps;
    half.init.burn_in_steps = 2 * sim.init.burn_in_steps;
    const TransitionEstimate h = estimate_transition_time(half, c.sim_transitions, ctx.threads);
    Json d = estimate_json(h, half.dt, half.seed);
    const double shift = std::abs(h.mean - main.mean);
    const double width = main.ci_high - main.ci_low;
    d["shift"] = tag(shift, kMc);
    d["ci_width"] = tag(width, kMc);
    d["discretization_bias"] = !(shift < width);
    j["dt_halving"] = std::move(d);
  }
  if (c.sim_sensitivity) {
    SimulationConfig other = sim;
    other.seed = sim.seed + 2;
    other.init.kind = kind == InitKind::HyperplaneConditioned ? InitKind::Deterministic : InitKind::HyperplaneConditioned;
    const TransitionEstimate o = estimate_transition_time(other, c.sim_transitions, ctx.threads);
    Json d = estimate_json(o, other.dt, other.seed);
    d["init"] = other.init.kind == InitKind::Deterministic ? "deterministic" : "hyperplane";
    j["init_sensitivity"] = std::move(d);
  }
  return j;
}

Json run_simulate(Context& ctx, bool& partial) {
  Json out = Json::array();
  for (size_t i = 0; i < ctx.cfg.N.size(); ++i) {
    try {
      if (!ctx.predictions[i]) throw Error(ErrorCode::StageFailure, "no prediction for this N");
      out.push_back(simulate_one(ctx, i));
    } catch (const std::exception& e) {
      partial = true;
      Json j;
      j["N"] = ctx.cfg.N[i];
      j["error"] = error_json(e);
      out.push_back(std::move(j));
    }
  }
  Json j;
  j["runs"] = std::move(out);
  return j;
}

Json scaling_json(const ScalingCheck& s) {
  Json j;
  j["N"] = s.Ns;
  j["max_deviation"] = s.max_deviation;
  j["scaled"] = s.scaled;
  j["band_ratio"] = tag(s.band_ratio, kOracle);
  j["band"] = s.band;
  j["within_band"] = s.within_band;
  return j;
}

Json run_verify_cramer(Context& ctx, bool&) {
  const auto& c = ctx.cfg;
  const auto rep = verify_local_cramer(ctx.spec, c.J, c.eps, c.verify_N, c.verify_m, ctx.threads);
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    Json row;
    row["N"] = r.N;
    row["m"] = r.m;
    row["phi_N"] = tag(r.phi_N, kOracle);
    row["phi"] = tag(r.phi, kOracle);
    row["phi2"] = tag(r.phi2, kOracle);
    row["ratio"] = tag(r.ratio, kOracle);
    row["deviation"] = tag(r.deviation, kOracle);
    rows.push_back(std::move(row));
  }
  Json j;
  j["rows"] = std::move(rows);
  j["scaling"] = scaling_json(rep.scaling);
  if (c.verify_char_fn) {
    Json decay = Json::array();
    for (double m : c.verify_m) {
      const DecayReport d = transform(ctx).char_fn_decay(m, c.char_fn_xi);
      Json e;
      e["m"] = m;
      e["xi"] = d.xi;
      e["modulus"] = d.modulus;
      e["c_hat"] = tag(d.c_hat, kOracle);
      e["growing"] = d.growing;
      decay.push_back(std::move(e));
    }
    j["char_fn"] = std::move(decay);
  }
  return j;
}

double relative_error(const ScaledValue& approx, const ScaledValue& exact) {
  return std::abs(approx.mantissa / exact.mantissa * std::exp(approx.log_scale - exact.log_scale) - 1.0);
}

Json run_verify_laplace(Context& ctx, bool&) {
  const auto& c = ctx.cfg;
  std::vector<double> eps = c.laplace_eps;
  std::sort(eps.begin(), eps.end(), std::greater<>());
  const double tilt = ctx.spec.effective(c.laplace_minimizer, 1, c.J);
  std::vector<LaplaceProblem> problems;
  for (double e : eps) problems.push_back(LaplaceProblem::make(ctx.spec, c.J, tilt, e));

  Json rows = Json::array();
  Json decay = Json::array();
  for (int k : c.laplace_k) {
    for (Parity parity : {Parity::Even, Parity::Odd}) {
      const int power = parity == Parity::Even ? 2 * k : 2 * k + 1;
      std::vector<double> errs(eps.size());
      std::vector<Json> part(eps.size());
      parallel_for(static_cast<int>(eps.size()), ctx.threads, [&](int i) {
        const ScaledValue a = laplace_moment_scaled(problems[i], k, parity);
        const ScaledValue q = quad_oracle_scaled(problems[i], power, Center::Minimizer);
        errs[i] = relative_error(a, q);
        Json row;
        row["k"] = k;
        row["parity"] = parity == Parity::Even ? "even" : "odd";
        row["eps"] = eps[i];
        row["laplace"] = tag(a.value(), kFormula);
        row["oracle"] = tag(q.value(), kOracle);
        row["relative_error"] = tag(errs[i], kOracle);
        part[i] = std::move(row);
      });
      for (auto& r : part) rows.push_back(std::move(r));

      // C fitted at the largest eps against sqrt(eps log^3(1/eps)).
      auto rate = [](double e) { return std::sqrt(e * std::pow(std::log(1.0 / e), 3)); };
      Json d;
      d["k"] = k;
      d["parity"] = parity == Parity::Even ? "even" : "odd";
      const double C = eps.empty() ? 0.0 : errs[0] / rate(eps[0]);
      bool monotone = true, bounded = true;
      for (size_t i = 1; i < eps.size(); ++i) {
        monotone = monotone && errs[i] <= errs[i - 1];
        bounded = bounded && errs[i] <= C * rate(eps[i]) * (1 + 1e-9);
      }
      d["fitted_C"] = tag(C, kOracle);
      d["non_increasing"] = monotone;
      d["within_rate"] = bounded;
      decay.push_back(std::move(d));
    }
  }
  Json j;
  j["tilt"] = tilt;
  j["minimizer"] = problems.empty() ? Json(nullptr) : Json(problems[0].minimizer);
  j["rows"] = std::move(rows);
  j["decay"] = std::move(decay);
  return j;
}

Json run_verify_observables(Context& ctx, bool&) {
  const auto& c = ctx.cfg;
  const Expression b = Expression::parse(c.observable);
  const auto rep = verify_equiv_observables(
      ctx.spec, c.J, c.eps, c.verify_N, [&](double z) { return b.eval(z); }, c.observable, c.verify_m, ctx.threads);
  Json rows = Json::array();
  for (const auto& r : rep.rows) {
    Json row;
    row["N"] = r.N;
    row["m"] = r.m;
    row["fiber"] = tag(r.fiber, kOracle);
    row["tilted"] = tag(r.tilted, kOracle);
    row["gap"] = tag(r.gap, kOracle);
    rows.push_back(std::move(row));
  }
  Json j;
  j["observable"] = rep.observable;
  j["rows"] = std::move(rows);
  j["scaling"] = scaling_json(rep.scaling);
  return j;
}

using StageFn = Json (*)(Context&, bool&);

StageFn stage_fn(const std::string& name) {
  if (name == "landscape") return run_landscape;
  if (name == "predict") return run_predict;
  if (name == "simulate") return run_simulate;
  if (name == "verify-cramer") return run_verify_cramer;
  if (name == "verify-laplace") return run_verify_laplace;
  return run_verify_observables;
}

// Stages whose output the named stage consumes.
std::vector<std::string> dependencies(const std::string& name) {
  if (name == "predict") return {"landscape"};
  if (name == "simulate") return {"landscape", "predict"};
  return {};
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg_in, const RunOptions& opt) {
  ExperimentConfig cfg = cfg_in;
  if (opt.seed) cfg.seed = *opt.seed;
  if (opt.stages) cfg.stages = *opt.stages;
  const int threads = opt.threads.value_or(cfg.threads);

  RunResult result;
  Json& report = result.report;
  const Json echo = config_to_json(cfg);
  report["schema"] = "mfk-report/1";
  report["config"] = echo;
  report["content_hash"] = "sha256:" + sha256_hex(echo.dump());
  Json prov;
  prov["master_seed"] = cfg.seed;
  prov["seed_source"] = opt.seed ? "command line" : "config";
  report["provenance"] = std::move(prov);

  Context ctx{cfg, cfg.seed, threads, make_potential(cfg), {}, {}, {}, {}};
  ctx.predictions.assign(cfg.N.size(), std::nullopt);

  // Enabled stages, in dependency order.
  std::vector<std::string> enabled;
  for (const auto& s : kStages)
    if (std::find(cfg.stages.begin(), cfg.stages.end(), s) != cfg.stages.end()) enabled.push_back(s);

  // Upstream stages that are not enabled still run (unreported) when something needs them.
  std::map<std::string, bool> ok;
  auto upstream_ok = [&](const std::string& dep) {
    auto it = ok.find(dep);
    if (it != ok.end()) return it->second;
    bool partial = false;
    try {
      stage_fn(dep)(ctx, partial);
      return ok[dep] = true;
    } catch (const std::exception& e) {
      spdlog::warn("implicit stage {} failed: {}", dep, e.what());
      return ok[dep] = false;
    }
  };

  Json stages = Json::object();
  Json timing = Json::object();
  const auto t_start = std::chrono::steady_clock::now();
  for (const auto& name : enabled) {
    const auto t0 = std::chrono::steady_clock::now();
    Json entry;
    spdlog::debug("stage {} started", name);
    std::string missing;
    for (const auto& dep : dependencies(name))
      if (missing.empty() && !upstream_ok(dep)) missing = dep;
    if (!missing.empty()) {
      entry["status"] = "failed";
      Json err;
      err["code"] = std::string(to_string(ErrorCode::StageFailure));
      err["message"] = "stage " + name + " needs " + missing + ", which failed";
      entry["error"] = std::move(err);
      ok[name] = false;
    } else {
      bool partial = false;
      try {
        Json r = stage_fn(name)(ctx, partial);
        entry["status"] = partial ? "failed" : "ok";
        entry["result"] = std::move(r);
        ok[name] = true;  // downstream stages handle missing N entries themselves
      } catch (const std::exception& e) {
        entry["status"] = "failed";
        entry["error"] = error_json(e);
        ok[name] = false;
      }
    }
    if (entry["status"] != "ok") {
      result.any_failed = true;
      spdlog::error("stage {} failed", name);
    }
    stages[name] = std::move(entry);
    timing[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  report["stages"] = std::move(stages);

  result.timing["stages_seconds"] = std::move(timing);
  result.timing["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  result.timing["threads"] = threads;
  result.files = std::move(ctx.files);
  return result;
}

}  // namespace mfk::app
