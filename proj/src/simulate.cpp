#include "mfk/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "format.hpp"
#include "mfk/error.hpp"
#include "mfk/kernels.hpp"

namespace mfk {

namespace {

constexpr uint32_t kPhaseMain = 0;
constexpr uint32_t kPhaseBurnIn = 1;
constexpr uint32_t kPhaseSampler = 2;
constexpr int kLanes = 16;
constexpr int kBlowupCheck = 256;

[[noreturn]] void invalid(const std::string& what) { throw Error(ErrorCode::ConfigInvalid, what); }

CubicForce force_of(const SimulationConfig& cfg) {
  auto f = cfg.potential.cubic_force(cfg.J);
  if (!f) invalid("simulation needs a site force of the form a3 z^3 + a1 z; got " + cfg.potential.describe());
  return *f;
}

kernels::EmBatch em_params(const SimulationConfig& cfg, int lanes, bool project) {
  const CubicForce f = force_of(cfg);
  return kernels::EmBatch{cfg.N, lanes, f.a3, f.a1, cfg.J, cfg.dt, std::sqrt(2.0 * cfg.eps * cfg.dt), project};
}

// Lane-batched state shared by the transition runner and the samplers.
struct Lanes {
  int N, L;
  std::vector<double> x, xi, mean;
  std::vector<uint64_t> traj;
  std::vector<uint32_t> step;

  Lanes(int n, int lanes)
      : N(n), L(lanes), x(static_cast<size_t>(n) * lanes), xi(x.size()), mean(lanes), traj(lanes), step(lanes) {}

  double& at(int i, int l) { return x[static_cast<size_t>(i) * L + l]; }

  void advance(const kernels::KernelTable& k, uint64_t seed, uint32_t phase, const kernels::EmBatch& p) {
    k.fill_normals(kernels::NormalBatch{seed, phase, N, L, traj.data(), step.data()}, xi.data());
    k.em_step(p, x.data(), xi.data(), mean.data());
    for (auto& s : step) ++s;
  }

  void check_bound(double bound, const std::vector<char>& live) {
    for (int l = 0; l < L; ++l) {
      if (!live[l]) continue;
      for (int i = 0; i < N; ++i) {
        if (!(std::abs(at(i, l)) <= bound)) {
          std::ostringstream os;
          os << "|x| left the bound " << bound << " in trajectory " << traj[l] << " at step " << step[l]
             << "; reduce dt";
          throw Error(ErrorCode::NumericBlowup, os.str());
        }
      }
    }
  }
};

// Post-burn-in starting states for trajectories [first, first + count).
std::vector<double> initial_states(const SimulationConfig& cfg, uint64_t first, int count) {
  std::vector<double> out(static_cast<size_t>(count) * cfg.N, cfg.init.m0);
  if (cfg.init.kind == InitKind::Deterministic) return out;
  const auto& k = kernels::active_table();
  for (int b = 0; b < count; b += kLanes) {
    const int L = std::min(kLanes, count - b);
    Lanes lanes(cfg.N, L);
    std::fill(lanes.x.begin(), lanes.x.end(), cfg.init.m0);
    for (int l = 0; l < L; ++l) lanes.traj[l] = first + b + l;
    const auto p = em_params(cfg, L, true);
    const std::vector<char> live(L, 1);
    for (int64_t s = 0; s < cfg.init.burn_in_steps; ++s) {
      lanes.advance(k, cfg.seed, kPhaseBurnIn, p);
      if ((s + 1) % kBlowupCheck == 0) lanes.check_bound(cfg.state_bound, live);
    }
    lanes.check_bound(cfg.state_bound, live);
    for (int l = 0; l < L; ++l)
      for (int i = 0; i < cfg.N; ++i) out[static_cast<size_t>(b + l) * cfg.N + i] = lanes.at(i, l);
  }
  return out;
}

double observe(const SimulationConfig& cfg, Lanes& lanes, int l) {
  if (cfg.observable == Observable::FirstCoordinate) return lanes.at(0, l);
  double sum = 0.0;
  for (int i = 0; i < cfg.N; ++i) sum = sum + lanes.at(i, l);
  return sum * (1.0 / cfg.N);
}

}  // namespace

double stability_dt(const SimulationConfig& cfg) {
  const CubicForce f = force_of(cfg);
  const double B = std::max({2.0, std::abs(cfg.init.m0), std::abs(cfg.target)});
  return 0.1 / (3.0 * std::abs(f.a3) * B * B + std::abs(f.a1) + cfg.J);
}

void validate(const SimulationConfig& cfg) {
  if (cfg.N < 1) invalid("N must be at least 1");
  if (!(cfg.J >= 0.0)) invalid("J must be non-negative");
  if (!(cfg.eps >= 0.0)) invalid("eps must be non-negative");
  if (!(cfg.dt > 0.0)) invalid("dt must be positive");
  if (cfg.max_steps < 1 || cfg.max_steps > static_cast<int64_t>(UINT32_MAX)) invalid("max_steps must lie in [1, 2^32)");
  if (cfg.init.kind == InitKind::HyperplaneConditioned &&
      (cfg.init.burn_in_steps < 1 || cfg.init.burn_in_steps > static_cast<int64_t>(UINT32_MAX)))
    invalid("burn_in_steps must lie in [1, 2^32)");
  if (!std::isfinite(cfg.init.m0) || !std::isfinite(cfg.target)) invalid("m0 and target must be finite");
  if (!(cfg.state_bound > 0.0)) invalid("state_bound must be positive");
  if (cfg.N > 2 * 65536) invalid("N too large for the per-step counter layout");
  const double guard = stability_dt(cfg);
  if (cfg.dt > guard) {
    std::ostringstream os;
    os << "dt = " << cfg.dt << " exceeds the stability guard " << guard;
    invalid(os.str());
  }
}

double microscopic_hamiltonian(std::span<const double> x, double J, double eps, const PotentialSpec& spec) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  const double N = static_cast<double>(x.size());
  double site = 0.0, sum = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "state has a non-finite entry");
    site += spec.effective(v, 0, J);
    sum += v;
  }
  return (site - J / (2.0 * N) * sum * sum) / eps;
}

std::vector<double> microscopic_gradient(std::span<const double> x, double J, double eps, const PotentialSpec& spec) {
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidArgument, "eps must be positive");
  double sum = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "state has a non-finite entry");
    sum += v;
  }
  const double m = sum / static_cast<double>(x.size());
  std::vector<double> g(x.size());
  for (size_t i = 0; i < x.size(); ++i) g[i] = (spec.effective(x[i], 1, J) - J * m) / eps;
  return g;
}

std::vector<TransitionSample> simulate_trajectories(const SimulationConfig& cfg, uint64_t first, int count) {
  validate(cfg);
  if (count <= 0) return {};
  const std::vector<double> init = initial_states(cfg, first, count);
  const auto& k = kernels::active_table();
  const int L = std::min(kLanes, count);
  const auto p = em_params(cfg, L, false);

  std::vector<TransitionSample> out(count);
  Lanes lanes(cfg.N, L);
  std::vector<int> slot(L, -1);  // index into `out` per lane, -1 when idle
  std::vector<char> live(L, 0);
  std::vector<double> prev(L, 0.0);
  int next = 0, done = 0;

  auto load = [&](int l) {
    // Trajectories already past the level finish at time zero without stepping.
    while (next < count) {
      const int j = next++;
      for (int i = 0; i < cfg.N; ++i) lanes.at(i, l) = init[static_cast<size_t>(j) * cfg.N + i];
      lanes.traj[l] = first + j;
      lanes.step[l] = 0;
      const double v = observe(cfg, lanes, l);
      if (v >= cfg.target) {
        out[j] = TransitionSample{first + j, cfg.seed, 0, 0.0, true};
        ++done;
        continue;
      }
      slot[l] = j;
      live[l] = 1;
      prev[l] = v;
      return;
    }
    slot[l] = -1;
    live[l] = 0;
  };
  for (int l = 0; l < L; ++l) load(l);

  int64_t iter = 0;
  while (done < count) {
    lanes.advance(k, cfg.seed, kPhaseMain, p);
    ++iter;
    for (int l = 0; l < L; ++l) {
      if (!live[l]) continue;
      const double v = cfg.observable == Observable::EmpiricalMean ? lanes.mean[l] : lanes.at(0, l);
      const int64_t steps = lanes.step[l];
      if (v >= cfg.target) {
        const double frac = (cfg.target - prev[l]) / (v - prev[l]);
        out[slot[l]] = TransitionSample{lanes.traj[l], cfg.seed, steps, (static_cast<double>(steps - 1) + frac) * cfg.dt,
                                        true};
        ++done;
        load(l);
      } else if (steps >= cfg.max_steps) {
        out[slot[l]] = TransitionSample{lanes.traj[l], cfg.seed, steps, static_cast<double>(steps) * cfg.dt, false};
        ++done;
        load(l);
      } else {
        prev[l] = v;
      }
    }
    if (iter % kBlowupCheck == 0) lanes.check_bound(cfg.state_bound, live);
  }
  return out;
}

TransitionSample simulate_trajectory(const SimulationConfig& cfg) { return simulate_trajectories(cfg, 0, 1).front(); }

std::vector<std::vector<double>> sample_hyperplane(const SimulationConfig& cfg, double m, int n_samples, int thin) {
  SimulationConfig c = cfg;
  c.init = InitSpec{InitKind::HyperplaneConditioned, m, cfg.init.burn_in_steps};
  validate(c);
  if (n_samples < 0 || thin < 1) throw Error(ErrorCode::InvalidArgument, "n_samples >= 0 and thin >= 1 required");
  const auto& k = kernels::active_table();
  Lanes lanes(c.N, 1);
  std::fill(lanes.x.begin(), lanes.x.end(), m);
  const auto p = em_params(c, 1, true);
  const std::vector<char> live(1, 1);
  const int64_t total = c.init.burn_in_steps + static_cast<int64_t>(n_samples) * thin;
  if (total > static_cast<int64_t>(UINT32_MAX)) invalid("sampler run exceeds the step counter");
  std::vector<std::vector<double>> out;
  out.reserve(n_samples);
  for (int64_t s = 1; s <= total; ++s) {
    lanes.advance(k, c.seed, kPhaseSampler, p);
    if (s % kBlowupCheck == 0) lanes.check_bound(c.state_bound, live);
    if (s > c.init.burn_in_steps && (s - c.init.burn_in_steps) % thin == 0) out.emplace_back(lanes.x);
  }
  lanes.check_bound(c.state_bound, live);
  return out;
}

TransitionEstimate estimate_transition_time(const SimulationConfig& cfg, int n_transitions, int threads) {
  if (n_transitions <= 0) throw Error(ErrorCode::InvalidBudget, "n_transitions must be positive");
  validate(cfg);
  TransitionEstimate e;
  e.requested = n_transitions;
  e.samples.resize(n_transitions);

  // Fixed chunks written to fixed slots: the result does not depend on scheduling.
  const int chunk = 64;
  const int chunks = (n_transitions + chunk - 1) / chunk;
  std::atomic<int> cursor{0};
  std::vector<std::exception_ptr> failures(chunks);
  auto worker = [&] {
    for (int c = cursor++; c < chunks; c = cursor++) {
      const int begin = c * chunk, len = std::min(chunk, n_transitions - begin);
      try {
        auto part = simulate_trajectories(cfg, static_cast<uint64_t>(begin), len);
        std::copy(part.begin(), part.end(), e.samples.begin() + begin);
      } catch (...) {
        failures[c] = std::current_exception();
      }
    }
  };
  const int T = std::clamp(threads, 1, chunks);
  std::vector<std::thread> pool;
  for (int t = 1; t < T; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& f : failures)
    if (f) std::rethrow_exception(f);

  std::vector<double> times;
  for (const auto& s : e.samples) {
    if (s.crossed) {
      times.push_back(s.hitting_time);
    } else {
      ++e.timeouts;
    }
  }
  e.crossed = static_cast<int>(times.size());
  e.timeout_warning = e.timeouts > 0;
  if (times.empty()) throw Error(ErrorCode::AllTimedOut, "no trajectory reached the target level");
  const double n = static_cast<double>(times.size());
  e.mean = std::accumulate(times.begin(), times.end(), 0.0) / n;
  double ss = 0.0;
  for (double t : times) ss += (t - e.mean) * (t - e.mean);
  e.sd = times.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  e.se = e.sd / std::sqrt(n);
  e.ci_low = e.mean - 1.959963984540054 * e.se;
  e.ci_high = e.mean + 1.959963984540054 * e.se;
  return e;
}

KsResult two_sample_ks(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::InvalidArgument, "KS test needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  KsResult r;
  r.statistic = d;
  r.critical = 1.6276 * std::sqrt((na + nb) / (na * nb));
  r.pass = d < r.critical;
  return r;
}

std::string transitions_csv(const std::vector<TransitionSample>& samples) {
  std::string out = "trajectory,seed,steps,hitting_time,crossed\n";
  for (const auto& s : samples) {
    out += std::to_string(s.trajectory) + "," + std::to_string(s.seed) + "," + std::to_string(s.steps) + "," +
           detail::format_double(s.hitting_time) + "," + (s.crossed ? "true" : "false") + "\n";
  }
  return out;
}

}  // namespace mfk
