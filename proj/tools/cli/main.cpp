#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "mfk/app.hpp"
#include "mfk/error.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kStageFailure = 3;

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("kramers");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("KRAMERS_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept it when asked for.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
    else spdlog::warn("KRAMERS_LOG={} not recognized, keeping warn", env);
  }
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  using namespace mfk;

  CLI::App app{"Mean-field metastability experiments: landscape, Eyring-Kramers predictions, simulation, verification"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_dir, stages_text;
  uint64_t seed = 0;
  int threads = 0;
  app.add_option("--config", config_path, "experiment config (flat TOML)")->check(CLI::ExistingFile);
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides the config)");
  auto* stages_opt = app.add_option("--stages", stages_text, "comma list of stages (overrides the config)");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"landscape", "critical points and the free-energy curve"},
      {"predict", "Eyring-Kramers predictions per N"},
      {"simulate", "Monte Carlo transition times per N"},
      {"verify-cramer", "local Cramer theorem against exact fiber integrals"},
      {"verify-laplace", "Laplace asymptotics against quadrature"},
      {"verify-observables", "fiber vs tilted expectations of an observable"},
      {"report", "re-render tables and plots from an existing report.json"},
      {"all", "every stage enabled in the config"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();

  app::ExperimentConfig cfg;
  app::RunOptions opt;
  try {
    if (!config_path.empty()) cfg = app::load_config(config_path);
    if (*seed_opt) opt.seed = seed;
    if (*threads_opt) opt.threads = threads;
    if (*stages_opt) opt.stages = app::parse_stage_list(stages_text);
    else if (cmd != "all" && cmd != "report") opt.stages = std::vector<std::string>{cmd};
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  const std::filesystem::path out = out_dir.empty() ? std::filesystem::path(cfg.out) : std::filesystem::path(out_dir);

  try {
    if (cmd == "report") {
      std::ifstream in(out / "report.json");
      if (!in) throw Error(ErrorCode::IoFailure, "no report.json in '" + out.string() + "'");
      app::Json report;
      try {
        report = app::Json::parse(in);
      } catch (const std::exception& e) {
        std::cerr << "config error: report.json is not valid JSON: " << e.what() << "\n";
        return kConfigError;
      }
      app::render_report(report, out);
      return kOk;
    }
    const app::RunResult r = app::run_experiment(cfg, opt);
    app::write_outputs(r, out);
    for (const auto& [name, entry] : r.report["stages"].items()) {
      std::cout << name << ": " << entry["status"].get<std::string>();
      if (entry.contains("error")) std::cout << " (" << entry["error"]["message"].get<std::string>() << ")";
      std::cout << "\n";
    }
    std::cout << "report written to " << (out / "report.json").string() << "\n";
    return r.any_failed ? kStageFailure : kOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == ErrorCode::ConfigInvalid ? kConfigError : kStageFailure;
  }
}
