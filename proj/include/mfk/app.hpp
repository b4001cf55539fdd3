#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace mfk::app {

using Json = nlohmann::ordered_json;

// Pipeline stages in dependency order.
inline const std::vector<std::string> kStages = {"landscape",     "predict",        "simulate",
                                                 "verify-cramer", "verify-laplace", "verify-observables"};

struct ExperimentConfig {
  // potential
  std::string potential = "quartic";  // quartic | effective_quartic | general
  std::string expression;             // general only
  double growth_alpha = 0.0;
  double growth_radius = 0.0;
  double J = 2.0;
  double eps = 0.1;
  std::string regime = "low";  // low | high
  std::vector<int> N = {2, 4, 8};
  std::vector<std::string> stages = kStages;
  uint64_t seed = 1;
  int threads = 1;
  std::string out = "out";

  // landscape
  int landscape_points = 201;
  double landscape_range = 2.0;

  // predict
  double poincare = 1.0;  // high-temperature rough bounds

  // simulate
  double sim_dt = 5e-4;
  int sim_transitions = 2000;
  int64_t sim_burn_in = 20000;
  std::string sim_level = "asymptotic";  // asymptotic: target m* - eta; wells: eta = 0
  std::string sim_init = "hyperplane";   // hyperplane | deterministic
  bool sim_sensitivity = true;           // also run the other initialization
  bool sim_dt_halving = true;
  int64_t sim_max_steps_ceiling = 4000000000;
  double sim_state_bound = 50.0;

  // verification
  std::vector<int> verify_N = {2, 3, 4};
  std::vector<double> verify_m = {0.0, 0.5, 1.0};
  bool verify_char_fn = true;
  std::vector<double> char_fn_xi = {1.0, 10.0, 100.0};
  std::string observable = "z^2";
  double laplace_minimizer = 1.1;  // tilt = psi_J'(laplace_minimizer)
  std::vector<double> laplace_eps = {0.1, 0.05, 0.025, 0.0125};
  std::vector<int> laplace_k = {0, 1, 2};
};

// Flat TOML subset: `key = value` lines, values are strings, numbers, booleans or
// single-line arrays of those. Unknown keys, tables and duplicates raise ConfigInvalid.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical echo of every field, in declaration order.
Json config_to_json(const ExperimentConfig& cfg);

std::string sha256_hex(std::string_view data);

struct RunOptions {
  std::optional<uint64_t> seed;                   // overrides the config
  std::optional<std::vector<std::string>> stages;  // overrides the config
  std::optional<int> threads;
};

struct RunResult {
  Json report;
  Json timing;  // wall-clock per stage; kept out of the report so reruns stay byte-identical
  bool any_failed = false;
  // Extra output files (name, content), e.g. per-N transition tables.
  std::vector<std::pair<std::string, std::string>> files;
};

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt = {});

// report.json, timing.json, CSV tables and SVG plots.
void write_outputs(const RunResult& result, const std::filesystem::path& out);

// CSV tables and SVG plots from a report; missing stages give header-only tables.
void render_report(const Json& report, const std::filesystem::path& out);

// The individual renderings, exposed for golden tests.
std::string landscape_csv(const Json& report);
std::string predictions_csv(const Json& report);
std::string cramer_csv(const Json& report);
std::string observables_csv(const Json& report);
std::string laplace_csv(const Json& report);
std::string landscape_svg(const Json& report);
std::string laplace_svg(const Json& report);

std::vector<std::string> parse_stage_list(std::string_view text);

}  // namespace mfk::app
