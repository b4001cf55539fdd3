#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "mfk/app.hpp"
#include "mfk/error.hpp"

using namespace mfk;
using namespace mfk::app;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small enough for a unit test: 40 trajectories per run, short burn-in.
ExperimentConfig quick() {
  return parse_config(R"(
J = 2
eps = 0.5
N = [2, 4]
verify_N = [2]
verify_m = [0.5]
char_fn_xi = [1.0]
laplace_eps = [0.1, 0.05]
laplace_k = [0]
sim_transitions = 40
sim_burn_in = 500
sim_level = "wells"
)");
}

int run_cli(const std::string& args) {
  const int rc = std::system((std::string(MFK_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mfk_test_app_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("config parser accepts the flat subset") {
  const auto c = parse_config(R"(
# comment
potential = "general"   # trailing comment
expression = "z^4/4 + 0.5*z^2"
growth_alpha = 0.25
growth_radius = 1_000
J = 1.5
N = [1, 2, 3,]
verify_char_fn = false
stages = ["landscape", "predict"]
seed = 18446744
)");
  CHECK(c.potential == "general");
  CHECK(c.expression == "z^4/4 + 0.5*z^2");
  CHECK(c.growth_radius == 1000.0);
  CHECK(c.J == 1.5);
  CHECK(c.N == std::vector<int>{1, 2, 3});
  CHECK_FALSE(c.verify_char_fn);
  CHECK(c.stages.size() == 2);
  CHECK(c.seed == 18446744u);
  CHECK(parse_config("").N == ExperimentConfig{}.N);
}

TEST_CASE("config parser rejects what it does not know") {
  auto bad = [](const char* text) {
    CHECK_THROWS_WITH_AS(parse_config(text), doctest::Contains("ConfigInvalid"), Error);
  };
  bad("temperature = 0.1\n");
  bad("[simulation]\nsim_dt = 1e-3\n");
  bad("eps = 0.1\neps = 0.2\n");
  bad("eps = \"hot\"\n");
  bad("N = 4\n");
  bad("N = [2, 2.5]\n");
  bad("eps = 0.1 0.2\n");
  bad("stages = [\"landscape\", \"plot\"]\n");
  bad("regime = \"high\"\neps = 0.5\n");
  bad("potential = \"general\"\n");
  bad("observable = \"z^^2\"\n");
  bad("verify_N = [5]\n");
  bad("just words\n");
  CHECK_THROWS_AS(parse_stage_list("landscape,,predict"), Error);
  CHECK(parse_stage_list("landscape, simulate") == std::vector<std::string>{"landscape", "simulate"});
}

TEST_CASE("config hash tracks content, not layout") {
  const auto a = config_to_json(parse_config("J = 2\neps = 0.1\n"));
  const auto b = config_to_json(parse_config("# same\neps = 0.1\n\nJ = 2.0\n"));
  const auto c = config_to_json(parse_config("J = 2\neps = 0.2\n"));
  CHECK(sha256_hex(a.dump()) == sha256_hex(b.dump()));
  CHECK(sha256_hex(a.dump()) != sha256_hex(c.dump()));
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("landscape-only run reports the landscape and nothing else") {
  auto c = parse_config("J = 2\neps = 0.05\nstages = [\"landscape\"]\n");
  const auto r = run_experiment(c);
  CHECK_FALSE(r.any_failed);
  const Json& st = r.report["stages"];
  REQUIRE(st.size() == 1);
  REQUIRE(st.contains("landscape"));
  const Json& res = st["landscape"]["result"];
  for (const char* key : {"m_star", "barrier", "curvature_minus", "curvature_zero", "curvature_plus"}) {
    CHECK(res[key]["path"] == "oracle");
    CHECK(res[key]["value"].is_number());
  }
  CHECK(res["curvature_zero"]["value"].get<double>() < 0.0);
  CHECK(res["curvature_minus"]["value"].get<double>() > 0.0);

  // The plotted grid shows the double well: two local minima, one local maximum.
  const auto& h = res["curve"]["hbar"];
  int minima = 0, maxima = 0;
  for (size_t i = 1; i + 1 < h.size(); ++i) {
    const double a = h[i - 1], b = h[i], d = h[i + 1];
    minima += b < a && b < d;
    maxima += b > a && b > d;
  }
  CHECK(minima == 2);
  CHECK(maxima == 1);
  CHECK(r.files.empty());
}

TEST_CASE("identical config and seed give byte-identical reports") {
  const auto c = quick();
  const auto a = run_experiment(c, {.seed = std::nullopt, .stages = std::nullopt, .threads = 1});
  const auto b = run_experiment(c, {.seed = std::nullopt, .stages = std::nullopt, .threads = 3});
  CHECK_FALSE(a.any_failed);
  CHECK(a.report.dump(2) == b.report.dump(2));
  REQUIRE(a.files.size() == b.files.size());
  for (size_t i = 0; i < a.files.size(); ++i) CHECK(a.files[i] == b.files[i]);

  const auto other = run_experiment(c, {.seed = 99, .stages = std::nullopt, .threads = 1});
  CHECK(other.report["provenance"]["seed_source"] == "command line");
  CHECK(other.report["content_hash"] != a.report["content_hash"]);
}

TEST_CASE("full pipeline carries prediction, estimate and the factor-3 verdict") {
  auto c = quick();
  c.N = {4};
  c.eps = 0.4;
  const auto r = run_experiment(c);
  const Json& run = r.report["stages"]["simulate"]["result"]["runs"][0];
  CHECK(run["N"] == 4);
  CHECK(run["prediction"]["path"] == "formula");
  CHECK(run["estimate"]["mean"]["path"] == "mc");
  CHECK(run["estimate"]["crossed"] == 40);
  CHECK(run["ratio"]["value"].get<double>() ==
        doctest::Approx(run["estimate"]["mean"]["value"].get<double>() / run["prediction"]["value"].get<double>()));
  CHECK(run["within_factor3"].is_boolean());
  CHECK(run.contains("dt_halving"));
  CHECK(run["init_sensitivity"]["init"] == "deterministic");
  REQUIRE(r.files.size() == 1);
  CHECK(r.files[0].first == "transitions_N4.csv");
}

TEST_CASE("disabling simulation leaves landscape and predictions unchanged") {
  const auto c = quick();
  const auto all = run_experiment(c);
  const auto some = run_experiment(c, {.seed = std::nullopt, .stages = std::vector<std::string>{"landscape", "predict"}, .threads = std::nullopt});
  CHECK(all.report["stages"]["landscape"] == some.report["stages"]["landscape"]);
  CHECK(all.report["stages"]["predict"] == some.report["stages"]["predict"]);
  // predict alone computes the landscape internally but does not report it.
  const auto alone = run_experiment(c, {.seed = std::nullopt, .stages = std::vector<std::string>{"predict"}, .threads = std::nullopt});
  CHECK_FALSE(alone.report["stages"].contains("landscape"));
  CHECK(alone.report["stages"]["predict"] == all.report["stages"]["predict"]);
}

TEST_CASE("stage failures stay local") {
  auto c = quick();
  c.sim_dt = 0.05;  // violates the stability guard
  auto r = run_experiment(c);
  CHECK(r.any_failed);
  const Json& st = r.report["stages"];
  CHECK(st["landscape"]["status"] == "ok");
  CHECK(st["predict"]["status"] == "ok");
  CHECK(st["simulate"]["status"] == "failed");
  CHECK(st["simulate"]["result"]["runs"][0]["error"]["code"] == "ConfigInvalid");
  CHECK(st["verify-cramer"]["status"] == "ok");

  // No double well: predict and simulate fail, verification still runs.
  auto flat = quick();
  flat.J = 0.5;
  r = run_experiment(flat);
  CHECK(r.report["stages"]["landscape"]["status"] == "failed");
  CHECK(r.report["stages"]["predict"]["error"]["code"] == "StageFailure");
  CHECK(r.report["stages"]["verify-laplace"]["status"] == "ok");

  // Literal eta at N = 2, eps = 0.5 leaves (0, m*): recorded per N.
  auto lit = quick();
  lit.sim_level = "asymptotic";
  lit.stages = {"simulate"};
  r = run_experiment(lit);
  CHECK(r.report["stages"]["simulate"]["result"]["runs"][0]["error"]["code"] == "GeometryDegenerate");
}

TEST_CASE("rendered tables match the golden files") {
  const fs::path dir = MFK_GOLDEN_DIR;
  const Json report = Json::parse(slurp(dir / "report_small.json"));
  CHECK(landscape_csv(report) == slurp(dir / "landscape.csv"));
  CHECK(predictions_csv(report) == slurp(dir / "predictions.csv"));
  CHECK(cramer_csv(report) == slurp(dir / "cramer_verification.csv"));
  CHECK(observables_csv(report) == slurp(dir / "observables_verification.csv"));
  CHECK(laplace_csv(report) == slurp(dir / "laplace_errors.csv"));
  const std::string svg = laplace_svg(report);
  CHECK(svg.find("k=0 even") != std::string::npos);
  CHECK(landscape_svg(report).find("<polyline") != std::string::npos);
}

TEST_CASE("an empty report renders header-only tables") {
  const fs::path out = scratch("empty");
  render_report(Json::object(), out);
  CHECK(slurp(out / "landscape.csv") == "m,hbar\n");
  CHECK(slurp(out / "cramer_verification.csv") == "N,m,phi_N,phi,phi2,ratio,deviation\n");
  CHECK(slurp(out / "observables_verification.csv") == "observable,N,m,fiber,tilted,gap\n");
  CHECK(slurp(out / "laplace_errors.csv") == "k,parity,eps,laplace,oracle,relative_error\n");
  CHECK(slurp(out / "predictions.csv").find('\n') == slurp(out / "predictions.csv").size() - 1);
  CHECK(slurp(out / "landscape.svg").find("no data") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("command line exit codes and outputs") {
  const fs::path dir = scratch("cli");
  {
    std::ofstream(dir / "ok.toml") << "J = 2\neps = 0.05\n";
    std::ofstream(dir / "bad.toml") << "J = 2\ntemperature = 3\n";
    std::ofstream(dir / "fail.toml") << "J = 0.5\neps = 0.5\n";
  }
  const std::string d = dir.string();
  CHECK(run_cli("landscape --config " + d + "/ok.toml --out " + d + "/a") == 0);
  CHECK(run_cli("landscape --config " + d + "/ok.toml --out " + d + "/b --threads 2") == 0);
  CHECK(slurp(dir / "a" / "report.json") == slurp(dir / "b" / "report.json"));
  CHECK(fs::exists(dir / "a" / "landscape.svg"));
  CHECK(fs::exists(dir / "a" / "timing.json"));
  CHECK(run_cli("landscape --config " + d + "/bad.toml --out " + d + "/c") == 2);
  CHECK(run_cli("all --config " + d + "/ok.toml --stages landscape,nonsense --out " + d + "/c") == 2);
  CHECK(run_cli("landscape --config " + d + "/fail.toml --out " + d + "/c") == 3);
  CHECK(run_cli("frobnicate") == 2);
  // report re-renders from an existing report.json.
  fs::remove(dir / "a" / "landscape.csv");
  CHECK(run_cli("report --out " + d + "/a") == 0);
  CHECK(fs::exists(dir / "a" / "landscape.csv"));
  fs::remove_all(dir);
}
