#include "spinmotion/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinmotion/architectures.hpp"
#include "spinmotion/constants.hpp"
#include "spinmotion/errors.hpp"
#include "spinmotion/landscape.hpp"
#include "spinmotion/montecarlo.hpp"
#include "spinmotion/protocols.hpp"
#include "spinmotion/rng.hpp"

namespace spinmotion::cli {

namespace mc = spinmotion::montecarlo;
namespace fs = std::filesystem;

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ------------------------------------------------------------------------
// Parameter registry: every command declares the keys it accepts, their
// type, bounds, default, and whether a list turns the key into a sweep
// axis. Keys carry explicit unit suffixes; bounds apply to the raw value.

enum class PKind { Num, Int, Seed, Text };

struct ParamSpec {
  std::string key;
  PKind kind = PKind::Num;
  bool sweepable = false;
  double lo = -1e308;
  bool lo_open = false;
  double hi = 1e308;
  bool hi_open = false;
  nlohmann::json def;
  std::vector<std::string> choices;  // Text only; empty = free text
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<ParamSpec> params;  // sweep axes in declaration order
};

ParamSpec num(std::string key, double def, double lo = -1e308,
              bool lo_open = false, bool sweepable = false) {
  return {std::move(key), PKind::Num, sweepable, lo, lo_open, 1e308, false,
          def,            {}};
}

ParamSpec axis(std::string key, nlohmann::json def, double lo,
               bool lo_open = true) {
  return {std::move(key), PKind::Num, true,  lo, lo_open, 1e308, false,
          std::move(def), {}};
}

ParamSpec integer(std::string key, int def, double lo, bool sweepable = false) {
  return {std::move(key), PKind::Int, sweepable, lo, false, 2147483647.0,
          false,          def,        {}};
}

ParamSpec text(std::string key, std::string def,
               std::vector<std::string> choices = {}) {
  return {std::move(key),     PKind::Text, false, 0, false, 0, false,
          nlohmann::json(std::move(def)), std::move(choices)};
}

std::vector<ParamSpec> with_common(std::vector<ParamSpec> params,
                                   int default_trials) {
  params.push_back(integer("trials", default_trials, 1));
  params.push_back({"seed", PKind::Seed, false, 0, false, 1e308, false, 1, {}});
  params.push_back(integer("workers", 0, 0));
  params.push_back(text("out", "."));
  return params;
}

std::vector<ParamSpec> landscape_params() {
  return {num("lambda_nm", 20.0, 0.0, true), num("dx_nm", 1.0, 0.0, true),
          num("dot_sigma_nm", 7.0, 0.0, true)};
}

void append(std::vector<ParamSpec>& dst, std::vector<ParamSpec> src) {
  for (auto& p : src) dst.push_back(std::move(p));
}

const std::vector<CommandSpec>& registry() {
  static const std::vector<CommandSpec> commands = [] {
    std::vector<CommandSpec> r;

    r.push_back({"demo-exchange",
                 "full and stroboscopic sigma_z traces of the exchange pair",
                 with_common({num("omega_MHz", 5.0, 0.0, true),
                              num("j_over_omega", 20.0, 0.0, true),
                              num("omega12_over_omega", 1.0, 0.0)},
                             1)});

    r.push_back({"sweep-exchange",
                 "exchange-pair X x X infidelity over J/Omega",
                 with_common({axis("j_over_omega",
                                   nlohmann::json::array({4, 10, 20, 40, 100}),
                                   0.0),
                              axis("omega12_over_omega",
                                   nlohmann::json::array({1.0}), 0.0, false),
                              num("omega_MHz", 5.0, 0.0, true)},
                             1)});

    r.push_back(
        {"sweep-tunnel",
         "tunnel-coupled X infidelity over t_c/Omega and omega12/Omega",
         with_common(
             {axis("t_c_over_omega",
                   nlohmann::json::array({10, 20, 40, 100, 200, 400, 1000}),
                   0.0),
              axis("omega12_over_omega", nlohmann::json::array({1.0}), 0.0,
                   false),
              num("omega_MHz", 5.0, 0.0, true), num("epsilon_MHz", 0.0)},
             1)});

    {
      std::vector<ParamSpec> p = {
          axis("d_um", nlohmann::json::array({0.5, 1.5, 3.0}), 0.0),
          axis("v_mps", nlohmann::json::array({10.0}), 0.0),
          num("omega_MHz", 1.0, 0.0, true),
          num("B0_tesla", 0.1, 0.0, true),
          num("delta_g_rel", 1e-3, 0.0),
          num("g0", 2.0, 0.0, true),
          text("mode", "path_mean", {"path_mean", "device_mean"})};
      append(p, landscape_params());
      r.push_back({"sweep-shuttle",
                   "shuttled single-qubit X infidelity over distance and speed",
                   with_common(std::move(p), 200)});
    }

    {
      std::vector<ParamSpec> p = {
          axis("d_um", nlohmann::json::array({1.0, 2.0, 4.0}), 0.0),
          axis("G_B0_MHz", nlohmann::json::array({1000.0}), 0.0),
          num("v_mps", 50.0, 0.0, true),
          num("omega_MHz", 5.0, 0.0, true),
          num("j_over_omega", std::sqrt(15.0), 0.0, true),
          num("B0_tesla", 0.1, 0.0, true),
          num("delta_g_rel", 1e-3, 0.0),
          num("g0", 2.0, 0.0, true),
          text("mode", "device_mean", {"path_mean", "device_mean"})};
      append(p, landscape_params());
      r.push_back({"sweep-crot",
                   "shuttled CROT infidelity over distance and target shift",
                   with_common(std::move(p), 100)});
    }

    {
      std::vector<ParamSpec> p = {
          integer("n_t", 8, 2, true),
          num("B0_tesla", 0.1, 0.0, true),
          num("delta_g_rel", 1e-3, 0.0),
          num("G_B0_MHz", 300.0, 0.0, true),
          num("v_mps", 10.0, 0.0, true),
          num("d_um", 3.0, 0.0, true),
          num("omega_MHz", 5.0, 0.0, true),
          num("g0", 2.0, 0.0, true),
          text("planner", "shuttle", {"shuttle", "binning"}),
          text("variant", "sigma_positive", {"sigma_positive", "sigma_zero"}),
          integer("p_bin", 1, 1)};
      append(p, landscape_params());
      r.push_back({"arch-2xn",
                   "two-rail device infidelity over the target count",
                   with_common(std::move(p), 200)});
    }

    {
      std::vector<ParamSpec> p = {
          integer("loops", 4, 1, true),
          integer("qubits_per_loop", 2, 1, true),
          axis("d_um", nlohmann::json::array({20.0}), 0.0),
          axis("v_mps", nlohmann::json::array({50.0}), 0.0),
          num("omega_MHz", 0.5, 0.0, true),
          num("B0_tesla", 0.1, 0.0, true),
          num("delta_g_rel", 1e-3, 0.0),
          num("g0", 2.0, 0.0, true),
          text("variant", "sigma_positive", {"sigma_positive", "sigma_zero"})};
      append(p, landscape_params());
      r.push_back({"arch-loop",
                   "looped-pipeline device infidelity over the loop layout",
                   with_common(std::move(p), 100)});
    }

    r.push_back(
        {"estimate-params",
         "closed-form design point for a target infidelity",
         with_common({num("delta_g_rel", 1e-3, 0.0, true),
                      num("g0", 2.0, 0.0, true),
                      num("B0_tesla", 0.1, 0.0, true),
                      num("omega_MHz", 5.0, 0.0, true),
                      num("lambda_nm", 20.0, 0.0, true),
                      {"target_infidelity", PKind::Num, false, 0.0, true, 1.0,
                       true, 2e-3, {}},
                      num("quantile_factor", 2.0, 0.0, true)},
                     1)});

    r.push_back({"schmidt",
                 "operator Schmidt coefficients of the exchange gate",
                 with_common({num("omega_MHz", 5.0, 0.0, true),
                              num("j_over_omega", 20.0, 0.0, true),
                              num("omega12_over_omega", 1.0, 0.0)},
                             1)});

    r.push_back({"gtensor",
                 "drive-axis tilt and amplitude for an anisotropic g-tensor",
                 with_common({num("g0", 1.994, 0.0, true), num("alpha", -1e-3),
                              num("beta", 1e-2), num("g13", 1e-3),
                              num("g23", 1e-3), num("g33", 2.002),
                              num("B1_tesla", 1e-3, 0.0, true)},
                             1)});
    return r;
  }();
  return commands;
}

const CommandSpec& command_spec(const std::string& name) {
  for (const auto& c : registry())
    if (c.name == name) return c;
  throw ConfigError("unknown command: " + name);
}

// Bare physical names -> the unit-suffixed key that should have been used.
const std::map<std::string, std::string>& bare_names() {
  static const std::map<std::string, std::string> m = {
      {"B0", "B0_tesla"},        {"B1", "B1_tesla"},
      {"omega", "omega_MHz"},    {"epsilon", "epsilon_MHz"},
      {"G_B0", "G_B0_MHz"},      {"d", "d_um"},
      {"v", "v_mps"},            {"lambda", "lambda_nm"},
      {"dx", "dx_nm"},           {"dot_sigma", "dot_sigma_nm"},
      {"delta_g", "delta_g_rel"},   {"target", "target_infidelity"},
      {"j", "j_over_omega"},     {"t_c", "t_c_over_omega"},
      {"omega12", "omega12_over_omega"}};
  return m;
}

std::string bounds_text(const ParamSpec& p) {
  std::string s;
  if (p.lo > -1e308)
    s += std::string("must be ") + (p.lo_open ? "> " : ">= ") +
         fmt_double(p.lo);
  if (p.hi < 1e308) {
    if (!s.empty()) s += " and ";
    s += std::string("must be ") + (p.hi_open ? "< " : "<= ") +
         fmt_double(p.hi);
  }
  return s;
}

void check_scalar(const ParamSpec& spec, const nlohmann::json& v) {
  const std::string where = "config key \"" + spec.key + "\": ";
  if (spec.kind == PKind::Text) {
    if (!v.is_string()) throw ConfigError(where + "expected a string");
    if (!spec.choices.empty() &&
        std::find(spec.choices.begin(), spec.choices.end(),
                  v.get<std::string>()) == spec.choices.end()) {
      std::string opts;
      for (const auto& c : spec.choices) opts += (opts.empty() ? "" : ", ") + c;
      throw ConfigError(where + "\"" + v.get<std::string>() +
                        "\" is not one of {" + opts + "}");
    }
    return;
  }
  if (!v.is_number()) throw ConfigError(where + "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + "expected a finite number");
  if (spec.kind == PKind::Int || spec.kind == PKind::Seed) {
    if (std::floor(d) != d || std::abs(d) > 9.22e18)
      throw ConfigError(where + "expected an integer");
    if (spec.kind == PKind::Seed) {
      if (d < 0.0) throw ConfigError(where + "must be >= 0");
      return;
    }
  }
  const bool lo_ok = spec.lo_open ? d > spec.lo : d >= spec.lo;
  const bool hi_ok = spec.hi_open ? d < spec.hi : d <= spec.hi;
  if (!lo_ok || !hi_ok)
    throw ConfigError(where + fmt_double(d) + " is out of range (" +
                      bounds_text(spec) + ")");
}

// Validates a raw document against the command's registry and returns the
// canonical parameter object (defaults filled, keys sorted by nlohmann).
nlohmann::json canonicalise(const CommandSpec& cmd, const nlohmann::json& doc) {
  for (const auto& [key, value] : doc.items()) {
    if (key == "command") continue;
    const auto spec = std::find_if(cmd.params.begin(), cmd.params.end(),
                                   [&](const ParamSpec& p) { return p.key == key; });
    if (spec == cmd.params.end()) {
      const auto bare = bare_names().find(key);
      if (bare != bare_names().end() &&
          std::any_of(cmd.params.begin(), cmd.params.end(),
                      [&](const ParamSpec& p) { return p.key == bare->second; }))
        throw ConfigError("missing unit suffix on \"" + key + "\": use \"" +
                          bare->second + "\"");
      throw ConfigError("unknown key: " + key);
    }
    if (value.is_array()) {
      if (!spec->sweepable)
        throw ConfigError("config key \"" + key + "\" does not take a list");
      if (value.empty())
        throw ConfigError("config key \"" + key + "\": empty list");
      for (const auto& item : value) check_scalar(*spec, item);
    } else {
      check_scalar(*spec, value);
    }
  }
  nlohmann::json canonical = nlohmann::json::object();
  for (const auto& spec : cmd.params)
    canonical[spec.key] = doc.contains(spec.key) ? doc.at(spec.key) : spec.def;

  if (canonical.contains("dx_nm") && canonical.contains("lambda_nm") &&
      !canonical["dx_nm"].is_array() && !canonical["lambda_nm"].is_array()) {
    if (canonical["dx_nm"].get<double>() >
        canonical["lambda_nm"].get<double>() / 10.0 + 1e-12)
      throw ConfigError(
          "config key \"dx_nm\": must be at most lambda_nm / 10");
  }
  return canonical;
}

RunConfig parse_document(const std::string& command_hint,
                         const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  std::string command = command_hint;
  if (doc.contains("command")) {
    if (!doc["command"].is_string())
      throw ConfigError("config key \"command\": expected a string");
    const auto from_doc = doc["command"].get<std::string>();
    if (!command.empty() && from_doc != command)
      throw ConfigError("config names command \"" + from_doc +
                        "\" but the command line says \"" + command + "\"");
    command = from_doc;
  }
  if (command.empty()) throw ConfigError("missing \"command\"");

  RunConfig cfg;
  cfg.command = command;
  cfg.params = canonicalise(command_spec(command), doc);
  return cfg;
}

// ------------------------------------------------------------------------
// Artifact helpers.

void write_text_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << content;
  os.flush();
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

std::string iso_utc_now() {
  const std::time_t tt =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&tt, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string trace_csv(const std::string& command, const std::string& sampling,
                      const protocols::TimeTrace& trace) {
  std::ostringstream os;
  os << "# spinmotion-trace-csv v1\n";
  os << "# command=" << command << " sampling=" << sampling
     << " tool_version=" << kToolVersion << "\n";
  os << "t_seconds,sz1,sz2\n";
  for (std::size_t k = 0; k < trace.t.size(); ++k)
    os << fmt_double(trace.t[k]) << "," << fmt_double(trace.sz1[k]) << ","
       << fmt_double(trace.sz2[k]) << "\n";
  return os.str();
}

// ------------------------------------------------------------------------
// Command implementations. Each returns the artifact basenames it wrote and
// may add a "result" object to the manifest.

struct CommandOutput {
  std::vector<std::string> files;
  nlohmann::json result;  // null unless the command has a scalar record
};

protocols::ExchangeConfig exchange_from(const RunConfig& cfg, double j_over,
                                        double w12_over) {
  protocols::ExchangeConfig e;
  e.rabi = cfg.internal("omega_MHz");
  e.j = j_over * e.rabi;
  e.p = static_cast<int>(std::llround(j_over / 2.0));
  e.omega12 = w12_over * e.rabi;
  return e;
}

CommandOutput run_demo_exchange(const RunConfig& cfg, const fs::path& out) {
  const auto e = exchange_from(cfg, cfg.number("j_over_omega"),
                               cfg.number("omega12_over_omega"));
  const double gate = kPi / e.rabi;
  const auto full = protocols::exchange_time_trace(e, gate / 2000.0);
  const auto strobe = protocols::exchange_time_trace(e, kTwoPi / e.j);
  write_text_file(out / "demo_full.csv",
                  trace_csv(cfg.command, "full", full));
  write_text_file(out / "demo_strobe.csv",
                  trace_csv(cfg.command, "stroboscopic", strobe));
  return {{"demo_full.csv", "demo_strobe.csv"}, {}};
}

mc::SweepSpec sweep_skeleton(const RunConfig& cfg, const CommandSpec& cmd,
                             const std::string& simulator_id) {
  mc::SweepSpec spec;
  for (const auto& p : cmd.params)
    if (p.sweepable) spec.axes.push_back({p.key, cfg.grid(p.key)});
  spec.trials_per_point = cfg.trials();
  spec.base_seed = cfg.seed();
  spec.simulator_id = simulator_id;
  spec.workers = cfg.workers();
  return spec;
}

CommandOutput write_sweep(const mc::SweepResult& result, const fs::path& out) {
  std::ostringstream csv;
  mc::write_csv(result, csv);
  write_text_file(out / "results.csv", csv.str());
  write_text_file(out / "results.json", mc::result_to_json(result) + "\n");
  return {{"results.csv", "results.json"}, {}};
}

CommandOutput run_sweep_exchange(const RunConfig& cfg, const fs::path& out) {
  const double rabi = cfg.internal("omega_MHz");
  const mc::Simulator sim = [rabi](const std::map<std::string, double>& p,
                                   uint64_t) {
    protocols::ExchangeConfig e;
    e.rabi = rabi;
    const double j_over = p.at("j_over_omega");
    e.j = j_over * rabi;
    e.p = static_cast<int>(std::llround(j_over / 2.0));
    e.omega12 = p.at("omega12_over_omega") * rabi;
    return protocols::exchange_gate_sim(e).infidelity;
  };
  const auto spec =
      sweep_skeleton(cfg, command_spec(cfg.command), "exchange-infidelity-v1");
  return write_sweep(mc::run_sweep(spec, sim), out);
}

CommandOutput run_sweep_tunnel(const RunConfig& cfg, const fs::path& out) {
  const double rabi = cfg.internal("omega_MHz");
  const double epsilon = cfg.internal("epsilon_MHz");
  const mc::Simulator sim = [rabi, epsilon](
                                const std::map<std::string, double>& p,
                                uint64_t) {
    protocols::TunnelConfig t;
    t.rabi = rabi;
    const double tc_over = p.at("t_c_over_omega");
    t.t_c = tc_over * rabi;
    t.p = static_cast<int>(std::llround(tc_over / 2.0));
    t.omega12 = p.at("omega12_over_omega") * rabi;
    t.epsilon = epsilon;
    return protocols::tunnel_gate_sim(t).infidelity;
  };
  const auto spec =
      sweep_skeleton(cfg, command_spec(cfg.command), "tunnel-infidelity-v1");
  return write_sweep(mc::run_sweep(spec, sim), out);
}

landscape::OUParams ou_from(const RunConfig& cfg, double d, uint64_t seed) {
  landscape::OUParams ou;
  ou.g0 = cfg.number("g0");
  ou.delta_g = cfg.number("delta_g_rel") * ou.g0;
  ou.lambda = cfg.internal("lambda_nm");
  ou.dx = cfg.internal("dx_nm");
  ou.length = std::max(d + 12.0 * cfg.internal("dot_sigma_nm"),
                       10.0 * ou.lambda);
  ou.seed = seed;
  return ou;
}

CommandOutput run_sweep_shuttle(const RunConfig& cfg, const fs::path& out) {
  const double rabi = cfg.internal("omega_MHz");
  const double b0 = cfg.number("B0_tesla");
  const double dot_sigma = cfg.internal("dot_sigma_nm");
  const auto mode = cfg.text("mode") == "path_mean"
                        ? protocols::DriveMode::PathMean
                        : protocols::DriveMode::DeviceMean;
  const RunConfig frozen = cfg;
  const mc::Simulator sim = [=](const std::map<std::string, double>& p,
                                uint64_t seed) {
    const double d = p.at("d_um") * 1e-6;
    const auto ou = ou_from(frozen, d, seed);
    const auto l = landscape::sample_ou(ou, {dot_sigma, false});
    landscape::ShuttleTrajectory traj;
    traj.kind = landscape::TrajectoryKind::Triangle;
    traj.d = d;
    traj.v = p.at("v_mps");
    traj.origin = ou.length / 2.0;
    protocols::DriveTone tone;
    tone.rabi = rabi;
    return protocols::shuttled_x_gate_sim(l, traj, tone, b0, mode).infidelity;
  };
  const auto spec = sweep_skeleton(cfg, command_spec(cfg.command),
                                   "shuttled-x-infidelity-v1");
  return write_sweep(mc::run_sweep(spec, sim), out);
}

CommandOutput run_sweep_crot(const RunConfig& cfg, const fs::path& out) {
  const double rabi = cfg.internal("omega_MHz");
  const double b0 = cfg.number("B0_tesla");
  const double j0 = cfg.number("j_over_omega") * rabi;
  const double v = cfg.number("v_mps");
  const double dot_sigma = cfg.internal("dot_sigma_nm");
  const auto mode = cfg.text("mode") == "path_mean"
                        ? protocols::DriveMode::PathMean
                        : protocols::DriveMode::DeviceMean;
  const RunConfig frozen = cfg;
  const mc::Simulator sim = [=](const std::map<std::string, double>& p,
                                uint64_t seed) {
    const double d = p.at("d_um") * 1e-6;
    auto ou = ou_from(frozen, d, derive_seed(seed, 0));
    const auto l1 = landscape::sample_ou(ou, {dot_sigma, false});
    ou.seed = derive_seed(seed, 1);
    const auto l2 = landscape::sample_ou(ou, {dot_sigma, false});
    landscape::ShuttleTrajectory traj;
    traj.kind = landscape::TrajectoryKind::Triangle;
    traj.d = d;
    traj.v = v;
    traj.origin = ou.length / 2.0;
    protocols::CrotConfig crot;
    crot.g_shift = mhz_to_rads(p.at("G_B0_MHz")) / (b0 * kMuBOverHbar);
    crot.j0 = j0;
    crot.rabi = rabi;
    crot.b0 = b0;
    crot.mode = mode;
    return protocols::shuttled_crot_sim(l1, l2, crot, traj).infidelity;
  };
  const auto spec = sweep_skeleton(cfg, command_spec(cfg.command),
                                   "shuttled-crot-infidelity-v1");
  return write_sweep(mc::run_sweep(spec, sim), out);
}

architectures::ArchitectureConfig arch_common(const RunConfig& cfg) {
  architectures::ArchitectureConfig a;
  a.b0 = cfg.number("B0_tesla");
  a.g0 = cfg.number("g0");
  a.delta_g = cfg.number("delta_g_rel") * a.g0;
  a.rabi_nominal = cfg.internal("omega_MHz");
  a.lambda = cfg.internal("lambda_nm");
  a.dx = cfg.internal("dx_nm");
  a.dot_sigma = cfg.internal("dot_sigma_nm");
  return a;
}

CommandOutput run_arch_2xn(const RunConfig& cfg, const fs::path& out) {
  auto base = arch_common(cfg);
  base.kind = architectures::ArchKind::TwoByN;
  base.g_shift = cfg.internal("G_B0_MHz") / (base.b0 * kMuBOverHbar);
  base.d = cfg.internal("d_um");
  base.v = cfg.number("v_mps");
  const bool binning = cfg.text("planner") == "binning";
  const auto variant = cfg.text("variant") == "sigma_zero"
                           ? architectures::ShuttleVariant::SigmaZero
                           : architectures::ShuttleVariant::SigmaPositive;
  const int p_bin = cfg.integer("p_bin");
  const mc::Simulator sim = [=](const std::map<std::string, double>& p,
                                uint64_t seed) {
    auto a = base;
    a.n_t = static_cast<int>(std::llround(p.at("n_t")));
    const auto s = architectures::build_2xn_scenario(a, seed);
    const auto r =
        binning ? architectures::simulate_scenario(
                      s, architectures::plan_binning_drive(s, p_bin))
                : architectures::simulate_scenario(
                      s, architectures::plan_shuttle_drive(s, variant));
    return r.device_infidelity;
  };
  const auto spec =
      sweep_skeleton(cfg, command_spec(cfg.command), "arch-2xn-infidelity-v1");
  return write_sweep(mc::run_sweep(spec, sim), out);
}

CommandOutput run_arch_loop(const RunConfig& cfg, const fs::path& out) {
  auto base = arch_common(cfg);
  base.kind = architectures::ArchKind::LoopedPipeline;
  base.n_n = 0;
  const auto variant = cfg.text("variant") == "sigma_zero"
                           ? architectures::ShuttleVariant::SigmaZero
                           : architectures::ShuttleVariant::SigmaPositive;
  const mc::Simulator sim = [=](const std::map<std::string, double>& p,
                                uint64_t seed) {
    auto a = base;
    a.loops = static_cast<int>(std::llround(p.at("loops")));
    a.qubits_per_loop =
        static_cast<int>(std::llround(p.at("qubits_per_loop")));
    a.n_t = a.loops * a.qubits_per_loop;
    a.d = p.at("d_um") * 1e-6;
    a.v = p.at("v_mps");
    const auto s = architectures::build_loop_scenario(a, seed);
    const auto r = architectures::simulate_scenario(
        s, architectures::plan_shuttle_drive(s, variant));
    return r.device_infidelity;
  };
  const auto spec =
      sweep_skeleton(cfg, command_spec(cfg.command), "arch-loop-infidelity-v1");
  return write_sweep(mc::run_sweep(spec, sim), out);
}

CommandOutput run_estimate(const RunConfig& cfg, const fs::path& out) {
  const auto est = protocols::estimate_parameters(
      cfg.number("delta_g_rel") * cfg.number("g0"), cfg.number("B0_tesla"),
      cfg.internal("omega_MHz"), cfg.internal("lambda_nm"),
      cfg.number("target_infidelity"), cfg.number("quantile_factor"));

  nlohmann::json result;
  result["d_min_m"] = est.d_min;
  result["d_min_um"] = est.d_min * 1e6;
  result["v_min_mps"] = est.v_min;
  result["v_min_cycles_mps"] = est.v_min_cycles;
  result["g_min"] = est.g_min;
  result["g_min_b0_rads"] = est.g_min_b0;
  result["g_min_b0_MHz"] = rads_to_mhz(est.g_min_b0);
  result["sigma_at_d_rads"] = est.sigma_at_d;
  result["i1"] = est.i1;
  result["i2"] = est.i2;

  std::ostringstream os;
  os << "# spinmotion-estimate-csv v1\n";
  os << "# command=estimate-params tool_version=" << kToolVersion << "\n";
  os << "d_min_m,d_min_um,v_min_mps,v_min_cycles_mps,g_min,g_min_b0_rads,"
        "g_min_b0_MHz,sigma_at_d_rads,i1,i2\n";
  os << fmt_double(est.d_min) << "," << fmt_double(est.d_min * 1e6) << ","
     << fmt_double(est.v_min) << "," << fmt_double(est.v_min_cycles) << ","
     << fmt_double(est.g_min) << "," << fmt_double(est.g_min_b0) << ","
     << fmt_double(rads_to_mhz(est.g_min_b0)) << ","
     << fmt_double(est.sigma_at_d) << "," << fmt_double(est.i1) << ","
     << fmt_double(est.i2) << "\n";
  write_text_file(out / "estimate.csv", os.str());
  return {{"estimate.csv"}, result};
}

CommandOutput run_schmidt(const RunConfig& cfg, const fs::path& out) {
  const auto e = exchange_from(cfg, cfg.number("j_over_omega"),
                               cfg.number("omega12_over_omega"));
  const auto gate = protocols::exchange_gate_sim(e);
  const auto alpha = qdyn::schmidt_coefficients(gate.u);

  std::ostringstream os;
  os << "# spinmotion-schmidt-csv v1\n";
  os << "# command=schmidt tool_version=" << kToolVersion << "\n";
  os << "index,coefficient\n";
  double sum_sq = 0.0;
  for (int i = 0; i < 4; ++i) {
    os << i << "," << fmt_double(alpha[i]) << "\n";
    sum_sq += alpha[i] * alpha[i];
  }
  write_text_file(out / "schmidt.csv", os.str());

  nlohmann::json result;
  result["coefficients"] = {alpha[0], alpha[1], alpha[2], alpha[3]};
  result["sum_of_squares"] = sum_sq;
  result["gate_infidelity"] = gate.infidelity;
  return {{"schmidt.csv"}, result};
}

CommandOutput run_gtensor(const RunConfig& cfg, const fs::path& out) {
  protocols::GTensor g;
  g.g0 = cfg.number("g0");
  g.alpha = cfg.number("alpha");
  g.beta = cfg.number("beta");
  g.g13 = cfg.number("g13");
  g.g23 = cfg.number("g23");
  g.g33 = cfg.number("g33");
  const double b1 = cfg.number("B1_tesla");
  const auto axis = protocols::gtensor_axis(g, b1);

  std::ostringstream os;
  os << "# spinmotion-gtensor-csv v1\n";
  os << "# command=gtensor tool_version=" << kToolVersion << "\n";
  os << "theta_rad,b1_eff_ratio,phase_correction_rad\n";
  os << fmt_double(axis.theta) << "," << fmt_double(axis.b1_eff / b1) << ","
     << fmt_double(axis.phase_correction) << "\n";
  write_text_file(out / "gtensor.csv", os.str());

  nlohmann::json result;
  result["theta_rad"] = axis.theta;
  result["b1_eff_tesla"] = axis.b1_eff;
  result["b1_eff_ratio"] = axis.b1_eff / b1;
  result["phase_correction_rad"] = axis.phase_correction;
  return {{"gtensor.csv"}, result};
}

CommandOutput dispatch(const RunConfig& cfg, const fs::path& out) {
  if (cfg.command == "demo-exchange") return run_demo_exchange(cfg, out);
  if (cfg.command == "sweep-exchange") return run_sweep_exchange(cfg, out);
  if (cfg.command == "sweep-tunnel") return run_sweep_tunnel(cfg, out);
  if (cfg.command == "sweep-shuttle") return run_sweep_shuttle(cfg, out);
  if (cfg.command == "sweep-crot") return run_sweep_crot(cfg, out);
  if (cfg.command == "arch-2xn") return run_arch_2xn(cfg, out);
  if (cfg.command == "arch-loop") return run_arch_loop(cfg, out);
  if (cfg.command == "estimate-params") return run_estimate(cfg, out);
  if (cfg.command == "schmidt") return run_schmidt(cfg, out);
  if (cfg.command == "gtensor") return run_gtensor(cfg, out);
  throw ConfigError("unknown command: " + cfg.command);
}

void emit_error(std::ostream& err, const std::string& type,
                const std::string& message) {
  nlohmann::json record;
  record["error"]["type"] = type;
  record["error"]["message"] = message;
  err << record.dump() << "\n";
}

}  // namespace

// ------------------------------------------------------------------------
// RunConfig accessors.

double RunConfig::number(const std::string& key) const {
  if (!params.contains(key))
    throw ConfigError("config key \"" + key + "\": not present");
  const auto& v = params.at(key);
  if (v.is_array())
    throw ConfigError("config key \"" + key +
                      "\" holds a sweep list, not a scalar");
  return v.get<double>();
}

int RunConfig::integer(const std::string& key) const {
  return static_cast<int>(std::llround(number(key)));
}

std::string RunConfig::text(const std::string& key) const {
  if (!params.contains(key))
    throw ConfigError("config key \"" + key + "\": not present");
  return params.at(key).get<std::string>();
}

double RunConfig::internal(const std::string& key) const {
  const double raw = number(key);
  if (key.ends_with("_MHz")) return mhz_to_rads(raw);
  if (key.ends_with("_um")) return raw * 1e-6;
  if (key.ends_with("_nm")) return raw * 1e-9;
  return raw;
}

std::vector<double> RunConfig::grid(const std::string& key) const {
  if (!params.contains(key))
    throw ConfigError("config key \"" + key + "\": not present");
  const auto& v = params.at(key);
  if (v.is_array()) return v.get<std::vector<double>>();
  return {v.get<double>()};
}

bool RunConfig::is_grid(const std::string& key) const {
  return params.contains(key) && params.at(key).is_array();
}

int RunConfig::trials() const { return integer("trials"); }

uint64_t RunConfig::seed() const { return params.at("seed").get<uint64_t>(); }

int RunConfig::workers() const { return integer("workers"); }

std::string RunConfig::out_dir() const { return text("out"); }

const std::vector<std::string>& commands() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : registry()) n.push_back(c.name);
    return n;
  }();
  return names;
}

RunConfig parse_config(const std::string& json_text) {
  return parse_document("", json_text);
}

RunConfig parse_config_for(const std::string& command,
                           const std::string& json_text) {
  if (command.empty()) throw ConfigError("missing \"command\"");
  return parse_document(command, json_text);
}

std::string config_to_json(const RunConfig& cfg) {
  nlohmann::json doc = cfg.params;
  doc["command"] = cfg.command;
  return doc.dump(2);
}

RunOutcome run(const RunConfig& cfg, std::ostream& err) {
  const auto started_at = iso_utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const fs::path out(cfg.out_dir());
    fs::create_directories(out);
    CommandOutput artifacts = dispatch(cfg, out);

    nlohmann::json manifest;
    manifest["config"] = nlohmann::json::parse(config_to_json(cfg));
    manifest["seed"] = cfg.seed();
    manifest["generator_id"] = kGeneratorId;
    manifest["tool_version"] = kToolVersion;
    manifest["started_at"] = started_at;
    manifest["duration_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (!artifacts.result.is_null()) manifest["result"] = artifacts.result;
    write_text_file(out / "manifest.json", manifest.dump(2) + "\n");
    artifacts.files.push_back("manifest.json");

    RunOutcome outcome;
    outcome.exit_code = 0;
    for (const auto& f : artifacts.files)
      outcome.files.push_back((out / f).string());
    return outcome;
  } catch (const ConfigError& e) {
    emit_error(err, "config", e.what());
    return {2, {}};
  } catch (const std::exception& e) {
    emit_error(err, "runtime", e.what());
    return {3, {}};
  }
}

int cli_main(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"spin-qubit shuttling, crosstalk and architecture simulator"};
  app.name("spinmotion");
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int trials = 0;
  uint64_t seed = 0;
  int workers = 0;
  for (const auto& c : registry()) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "JSON configuration file");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--trials", trials, "override the trial count");
    sub->add_option("--seed", seed, "override the base seed");
    sub->add_option("--workers", workers, "override the worker count");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    emit_error(err, "config", e.what());
    return 2;
  }

  const auto* sub = app.get_subcommands().front();
  std::string text = "{}";
  if (sub->count("--config") > 0) {
    std::ifstream is(config_path);
    if (!is) {
      emit_error(err, "config", "cannot read config file: " + config_path);
      return 2;
    }
    std::stringstream buffer;
    buffer << is.rdbuf();
    text = buffer.str();
  }

  RunConfig cfg;
  try {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    if (sub->count("--out") > 0) doc["out"] = out_dir;
    if (sub->count("--trials") > 0) doc["trials"] = trials;
    if (sub->count("--seed") > 0) doc["seed"] = seed;
    if (sub->count("--workers") > 0) doc["workers"] = workers;
    cfg = parse_config_for(sub->get_name(), doc.dump());
  } catch (const ConfigError& e) {
    emit_error(err, "config", e.what());
    return 2;
  }

  const RunOutcome outcome = run(cfg, err);
  for (const auto& f : outcome.files) out << f << "\n";
  return outcome.exit_code;
}

}  // namespace spinmotion::cli
