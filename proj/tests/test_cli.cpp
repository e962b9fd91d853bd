#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <doctest.h>
#include <json.hpp>

#include "spinmotion/cli.hpp"
#include "spinmotion/constants.hpp"
#include "spinmotion/protocols.hpp"

using namespace spinmotion;
using namespace spinmotion::cli;
namespace fs = std::filesystem;

namespace {

const char* kExampleConfig = R"({
  "command": "arch-2xn", "B0_tesla": 0.1, "delta_g_rel": 1e-3,
  "G_B0_MHz": 300, "v_mps": 10, "d_um": 3, "omega_MHz": 5,
  "n_t": [2, 4, 8, 16], "trials": 500, "seed": 7
})";

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("spinmotion_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  REQUIRE(is.good());
  std::stringstream buf;
  buf << is.rdbuf();
  return buf.str();
}

int run_cli(std::vector<std::string> args, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
  args.insert(args.begin(), "spinmotion");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code =
      cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("parse_config: the reference two-rail document validates") {
  const RunConfig cfg = parse_config(kExampleConfig);
  CHECK(cfg.command == "arch-2xn");
  CHECK(cfg.number("B0_tesla") == 0.1);
  CHECK(cfg.number("delta_g_rel") == 1e-3);
  CHECK(cfg.internal("G_B0_MHz") == mhz_to_rads(300.0));
  CHECK(cfg.internal("d_um") == 3e-6);
  CHECK(cfg.internal("omega_MHz") == mhz_to_rads(5.0));
  CHECK(cfg.is_grid("n_t"));
  CHECK(cfg.grid("n_t") == std::vector<double>{2, 4, 8, 16});
  CHECK(cfg.trials() == 500);
  CHECK(cfg.seed() == 7);

  // Defaults fill every remaining key of the command's schema.
  CHECK(cfg.text("planner") == "shuttle");
  CHECK(cfg.text("variant") == "sigma_positive");
  CHECK(cfg.integer("p_bin") == 1);
  CHECK(cfg.number("lambda_nm") == 20.0);
  CHECK(cfg.number("g0") == 2.0);
  CHECK(cfg.workers() == 0);
  CHECK(cfg.out_dir() == ".");
}

TEST_CASE("parse_config: serialise and re-parse is the identity") {
  const RunConfig cfg = parse_config(kExampleConfig);
  const RunConfig again = parse_config(config_to_json(cfg));
  CHECK(again == cfg);
  CHECK(config_to_json(again) == config_to_json(cfg));

  // Also for a command with only defaults.
  const RunConfig gt = parse_config_for("gtensor", "{}");
  CHECK(parse_config(config_to_json(gt)) == gt);
}

TEST_CASE("parse_config: a bare key names its unit-suffixed form") {
  try {
    parse_config(R"({"command":"arch-2xn","B0":0.1})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("B0") != std::string::npos);
    CHECK(msg.find("B0_tesla") != std::string::npos);
    CHECK(msg.find("missing unit suffix") != std::string::npos);
  }
}

TEST_CASE("parse_config: rejection taxonomy") {
  // Unknown key, unknown command, missing command.
  CHECK_THROWS_AS(parse_config(R"({"command":"gtensor","bogus":1})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"command":"frobnicate"})"), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"B1_tesla":1e-3})"), ConfigError);

  // Wrong types and out-of-range values name the key.
  try {
    parse_config(R"({"command":"arch-2xn","omega_MHz":"five"})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("omega_MHz") != std::string::npos);
  }
  try {
    parse_config(R"({"command":"arch-2xn","omega_MHz":-5})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("omega_MHz") != std::string::npos);
    CHECK(std::string(e.what()).find("out of range") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config(R"({"command":"arch-2xn","trials":0})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"command":"arch-2xn","n_t":2.5})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"command":"arch-2xn","seed":-1})"),
                  ConfigError);
  CHECK_THROWS_AS(
      parse_config(R"({"command":"arch-2xn","planner":"telepathy"})"),
      ConfigError);

  // Lists only on sweepable keys; grids must be non-empty.
  CHECK_THROWS_AS(parse_config(R"({"command":"arch-2xn","omega_MHz":[1,2]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"command":"arch-2xn","n_t":[]})"),
                  ConfigError);

  // Cross-field contract from the landscape sampler.
  CHECK_THROWS_AS(
      parse_config(R"({"command":"arch-2xn","dx_nm":5,"lambda_nm":20})"),
      ConfigError);

  // Command-line command and document command must agree.
  CHECK_THROWS_AS(parse_config_for("schmidt", R"({"command":"gtensor"})"),
                  ConfigError);
  CHECK(parse_config_for("schmidt", R"({"command":"schmidt"})").command ==
        "schmidt");

  // Not JSON / not an object.
  CHECK_THROWS_AS(parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(parse_config("[1,2]"), ConfigError);
}

TEST_CASE("run: gtensor writes the axis record and a full manifest") {
  const fs::path dir = fresh_dir("gtensor");
  RunConfig cfg = parse_config_for("gtensor", "{}");
  cfg.params["out"] = dir.string();
  std::ostringstream err;
  const RunOutcome outcome = run(cfg, err);
  CHECK(outcome.exit_code == 0);
  CHECK(err.str().empty());
  REQUIRE(outcome.files.size() == 2);

  const std::string csv = slurp(dir / "gtensor.csv");
  CHECK(csv.rfind("# spinmotion-gtensor-csv v1\n", 0) == 0);
  // The emitted record equals the library closed form at the defaults.
  const auto axis = protocols::gtensor_axis(protocols::GTensor{}, 1e-3);
  std::istringstream rows(csv);
  std::string line;
  std::getline(rows, line);
  std::getline(rows, line);
  std::getline(rows, line);  // header row
  CHECK(line == "theta_rad,b1_eff_ratio,phase_correction_rad");
  std::getline(rows, line);
  const double theta = std::stod(line.substr(0, line.find(',')));
  CHECK(theta == axis.theta);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  for (const char* key : {"config", "seed", "generator_id", "tool_version",
                          "started_at", "duration_s"})
    CHECK(manifest.contains(key));
  CHECK(manifest["config"]["command"] == "gtensor");
  CHECK(manifest["generator_id"] == kGeneratorId);
  const std::string t = manifest["started_at"].get<std::string>();
  REQUIRE(t.size() == 20);  // 2026-08-16T12:00:00Z
  CHECK(t[4] == '-');
  CHECK(t[10] == 'T');
  CHECK(t.back() == 'Z');
  CHECK(manifest["result"]["theta_rad"].get<double>() == axis.theta);
  CHECK(manifest["result"]["b1_eff_ratio"].get<double>() ==
        axis.b1_eff / 1e-3);
  fs::remove_all(dir);
}

TEST_CASE("run: estimate-params reports the design point both ways") {
  const fs::path dir = fresh_dir("estimate");
  RunConfig cfg = parse_config_for("estimate-params", "{}");
  cfg.params["out"] = dir.string();
  std::ostringstream err;
  REQUIRE(run(cfg, err).exit_code == 0);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  const auto& result = manifest["result"];
  // Matches the closed-form estimator at the default inputs, and carries
  // the angular and cycles readings side by side.
  const auto est = protocols::estimate_parameters(2e-3, 0.1, mhz_to_rads(5.0),
                                                  20e-9, 2e-3, 2.0);
  CHECK(result["d_min_m"].get<double>() == est.d_min);
  CHECK(result["d_min_um"].get<double>() == doctest::Approx(12.512).epsilon(1e-3));
  CHECK(result["v_min_mps"].get<double>() == est.v_min);
  CHECK(result["v_min_cycles_mps"].get<double>() == est.v_min_cycles);
  CHECK(result["g_min"].get<double>() == est.g_min);
  CHECK(result["g_min_b0_rads"].get<double>() == est.g_min_b0);
  CHECK(result["g_min_b0_MHz"].get<double>() ==
        doctest::Approx(111.69).epsilon(1e-3));

  const std::string csv = slurp(dir / "estimate.csv");
  CHECK(csv.find("d_min_m,d_min_um,v_min_mps,v_min_cycles_mps,g_min") !=
        std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("run: demo-exchange writes full and stroboscopic traces") {
  const fs::path dir = fresh_dir("demo");
  RunConfig cfg = parse_config_for("demo-exchange", "{}");
  cfg.params["out"] = dir.string();
  std::ostringstream err;
  REQUIRE(run(cfg, err).exit_code == 0);

  const std::string full = slurp(dir / "demo_full.csv");
  const std::string strobe = slurp(dir / "demo_strobe.csv");
  CHECK(full.rfind("# spinmotion-trace-csv v1\n", 0) == 0);
  const auto count_rows = [](const std::string& s) {
    return std::count(s.begin(), s.end(), '\n');
  };
  // Gate pi/Omega sampled every gate/2000 -> 2001 points; stroboscopic
  // sampling every 2 pi / J with J = 20 Omega -> 11 points. 3 header lines.
  CHECK(count_rows(full) == 2004);
  CHECK(count_rows(strobe) == 14);

  std::istringstream rows(strobe);
  std::string line;
  for (int k = 0; k < 4; ++k) std::getline(rows, line);
  // t = 0: state |0> x (sqrt(3)/2 |0> + 1/2 |1>) -> sz1 = 1, sz2 = 1/2.
  std::stringstream first(line);
  std::string field;
  std::getline(first, field, ',');
  CHECK(std::stod(field) == 0.0);
  std::getline(first, field, ',');
  CHECK(std::stod(field) == doctest::Approx(1.0).epsilon(1e-9));
  std::getline(first, field, ',');
  CHECK(std::stod(field) == doctest::Approx(0.5).epsilon(1e-9));

  // Identical config + seed give byte-identical CSV artifacts.
  const fs::path dir2 = fresh_dir("demo2");
  cfg.params["out"] = dir2.string();
  REQUIRE(run(cfg, err).exit_code == 0);
  CHECK(slurp(dir2 / "demo_full.csv") == full);
  CHECK(slurp(dir2 / "demo_strobe.csv") == strobe);
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("run: sweep-exchange matches the library simulation exactly") {
  const fs::path dir = fresh_dir("sweepex");
  RunConfig cfg = parse_config_for(
      "sweep-exchange", R"({"j_over_omega":[10,20],"trials":1})");
  cfg.params["out"] = dir.string();
  std::ostringstream err;
  REQUIRE(run(cfg, err).exit_code == 0);

  const auto result = nlohmann::json::parse(slurp(dir / "results.json"));
  CHECK(result["schema"] == "spinmotion-sweep-json v1");
  CHECK(result["simulator_id"] == "exchange-infidelity-v1");
  REQUIRE(result["points"].size() == 2);

  protocols::ExchangeConfig e;
  e.rabi = mhz_to_rads(5.0);
  e.p = 10;
  e.j = 20.0 * e.rabi;
  e.omega12 = e.rabi;
  const double direct = protocols::exchange_gate_sim(e).infidelity;
  CHECK(result["points"][1]["mean"].get<double>() == direct);
  CHECK(result["points"][1]["failures"] == 0);

  const std::string csv = slurp(dir / "results.csv");
  CHECK(csv.find("j_over_omega,omega12_over_omega,n,mean,std,p50,p95,"
                 "failures") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("run: arch-2xn sweeps the target count; binning conflicts count "
          "as failures") {
  const fs::path dir = fresh_dir("arch2xn");
  RunConfig cfg = parse_config_for("arch-2xn",
                                   R"({"n_t":[2,4],"trials":2,"seed":7})");
  cfg.params["out"] = dir.string();
  std::ostringstream err;
  REQUIRE(run(cfg, err).exit_code == 0);
  auto result = nlohmann::json::parse(slurp(dir / "results.json"));
  REQUIRE(result["points"].size() == 2);
  CHECK(result["points"][0]["failures"] == 0);
  CHECK(result["points"][1]["failures"] == 0);
  CHECK(result["points"][0]["mean"].get<double>() > 0.0);
  CHECK(result["axis_names"] == nlohmann::json({"n_t"}));

  // Dense spectrum + narrow bins: most relabelling attempts collide, the
  // instance is recorded as failed, and the sweep still completes.
  const fs::path dir2 = fresh_dir("arch2xn_bin");
  RunConfig bin = parse_config_for(
      "arch-2xn",
      R"({"planner":"binning","B0_tesla":1,"delta_g_rel":1e-2,
          "n_t":8,"trials":20,"seed":5})");
  bin.params["out"] = dir2.string();
  REQUIRE(run(bin, err).exit_code == 0);
  result = nlohmann::json::parse(slurp(dir2 / "results.json"));
  const int failures = result["points"][0]["failures"].get<int>();
  const int n = result["points"][0]["n"].get<int>();
  CHECK(failures >= 1);
  CHECK(n + failures == 20);
  if (n == 0) {
    CHECK(result["points"][0]["all_failed"] == true);
  } else {
    CHECK(result["points"][0]["mean"].get<double>() > 0.0);
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("run: identical config and seed give byte-identical sweep CSVs") {
  const fs::path a = fresh_dir("det_a");
  const fs::path b = fresh_dir("det_b");
  std::ostringstream err;
  RunConfig cfg = parse_config_for(
      "sweep-shuttle", R"({"d_um":[0.5,1.5],"trials":3,"seed":21})");
  cfg.params["out"] = a.string();
  REQUIRE(run(cfg, err).exit_code == 0);
  cfg.params["out"] = b.string();
  cfg.params["workers"] = 8;  // worker count must not change the bytes
  REQUIRE(run(cfg, err).exit_code == 0);
  CHECK(slurp(a / "results.csv") == slurp(b / "results.csv"));
  CHECK(slurp(a / "results.json") == slurp(b / "results.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("cli_main: subcommands, overrides, and exit codes") {
  const fs::path dir = fresh_dir("climain");
  std::string out, err;

  // Success: overrides land in the manifest's config echo.
  const int ok = run_cli({"gtensor", "--out", dir.string(), "--seed", "9"},
                         &out, &err);
  CHECK(ok == 0);
  CHECK(err.empty());
  CHECK(out.find("gtensor.csv") != std::string::npos);
  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["seed"] == 9);
  CHECK(manifest["config"]["seed"] == 9);

  // Config file on disk plus a --trials override.
  const fs::path cfg_path = dir / "cfg.json";
  {
    std::ofstream os(cfg_path);
    os << kExampleConfig;
  }
  const fs::path dir2 = fresh_dir("climain2");
  const int ok2 = run_cli({"arch-2xn", "--config", cfg_path.string(), "--out",
                           dir2.string(), "--trials", "1"},
                          &out, &err);
  CHECK(ok2 == 0);
  const auto m2 = nlohmann::json::parse(slurp(dir2 / "manifest.json"));
  CHECK(m2["config"]["trials"] == 1);
  CHECK(m2["config"]["n_t"] == nlohmann::json({2, 4, 8, 16}));
  CHECK(m2["seed"] == 7);

  // Config errors -> exit 2 with a machine-readable record.
  CHECK(run_cli({"gtensor", "--config", "/no/such/file.json"}, &out, &err) ==
        2);
  CHECK(nlohmann::json::parse(err)["error"]["type"] == "config");
  {
    std::ofstream os(cfg_path);
    os << R"({"command":"gtensor","bogus":1})";
  }
  CHECK(run_cli({"gtensor", "--config", cfg_path.string()}, &out, &err) == 2);
  CHECK(nlohmann::json::parse(err)["error"]["message"].get<std::string>() ==
        "unknown key: bogus");
  CHECK(run_cli({}, &out, &err) == 2);  // a subcommand is required

  // Runtime errors -> exit 3.
  const fs::path blocker = dir / "blocker";
  {
    std::ofstream os(blocker);
    os << "x";
  }
  CHECK(run_cli({"gtensor", "--out", (blocker / "sub").string()}, &out,
                &err) == 3);
  CHECK(nlohmann::json::parse(err)["error"]["type"] == "runtime");

  fs::remove_all(dir);
  fs::remove_all(dir2);
}
