#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mfk/potentials.hpp"

namespace mfk {

enum class InitKind { HyperplaneConditioned, Deterministic };

struct InitSpec {
  InitKind kind = InitKind::HyperplaneConditioned;
  double m0 = 0.0;
  int64_t burn_in_steps = 20000;  // projected Langevin steps; HyperplaneConditioned only
};

// Which scalar is compared against the target level.
enum class Observable { EmpiricalMean, FirstCoordinate };

struct SimulationConfig {
  int N = 1;
  double J = 0.0;
  double eps = 0.0;
  PotentialSpec potential = PotentialSpec::quartic_double_well();
  double dt = 1e-3;
  int64_t max_steps = 1000000;
  uint64_t seed = 0;
  InitSpec init;
  double target = 0.0;         // the run stops once the observable reaches this level
  double state_bound = 50.0;   // |x_i| beyond this is a numerical blow-up
  Observable observable = Observable::EmpiricalMean;
};

// Throws ConfigInvalid (or InvalidArgument) naming the offending field.
void validate(const SimulationConfig& cfg);

// Largest dt allowed by the explicit-step stability guard.
double stability_dt(const SimulationConfig& cfg);

struct TransitionSample {
  uint64_t trajectory = 0;  // Philox stream index under the master seed
  uint64_t seed = 0;        // master seed
  int64_t steps = 0;
  double hitting_time = 0.0;
  bool crossed = false;
};

struct TransitionEstimate {
  int requested = 0;
  int crossed = 0;
  int timeouts = 0;
  double mean = 0.0;
  double sd = 0.0;
  double se = 0.0;
  double ci_low = 0.0;   // 95% normal approximation
  double ci_high = 0.0;
  bool timeout_warning = false;
  std::vector<TransitionSample> samples;  // trajectory order
};

// H(x) = (1/eps) sum psi_J(x_i) - (1/eps)(J/2N) sum_ij x_i x_j.
double microscopic_hamiltonian(std::span<const double> x, double J, double eps, const PotentialSpec& spec);
std::vector<double> microscopic_gradient(std::span<const double> x, double J, double eps, const PotentialSpec& spec);

// Trajectory 0 of the master seed.
TransitionSample simulate_trajectory(const SimulationConfig& cfg);

// Trajectories [first, first + count), each a pure function of (cfg, index).
std::vector<TransitionSample> simulate_trajectories(const SimulationConfig& cfg, uint64_t first, int count);

// Mean-constrained Langevin started at x_i = m: every `thin`-th state after burn-in.
std::vector<std::vector<double>> sample_hyperplane(const SimulationConfig& cfg, double m, int n_samples, int thin = 1);

TransitionEstimate estimate_transition_time(const SimulationConfig& cfg, int n_transitions, int threads = 1);

struct KsResult {
  double statistic = 0.0;
  double critical = 0.0;  // 1% level
  bool pass = false;
};

KsResult two_sample_ks(std::vector<double> a, std::vector<double> b);

std::string transitions_csv(const std::vector<TransitionSample>& samples);

}  // namespace mfk
