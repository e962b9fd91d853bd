#include "spinmotion/architectures.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "spinmotion/constants.hpp"
#include "spinmotion/errors.hpp"
#include "spinmotion/rng.hpp"

namespace spinmotion::architectures {

namespace {

void validate_common(const ArchitectureConfig& cfg) {
  if (cfg.n_t < 1) throw std::invalid_argument("architectures: n_t must be >= 1");
  if (cfg.n_n < -1) throw std::invalid_argument("architectures: n_n must be >= 0 (or -1 for default)");
  if (!(cfg.d > 0.0)) throw std::invalid_argument("architectures: d must be > 0");
  if (!(cfg.v > 0.0)) throw std::invalid_argument("architectures: v must be > 0");
  if (!(cfg.b0 > 0.0)) throw std::invalid_argument("architectures: b0 must be > 0");
  if (!(cfg.rabi_nominal > 0.0)) {
    throw std::invalid_argument("architectures: rabi_nominal must be > 0");
  }
  if (cfg.delta_g < 0.0) throw std::invalid_argument("architectures: delta_g must be >= 0");
}

landscape::OUParams ou_for(const ArchitectureConfig& cfg, double length,
                           uint64_t seed) {
  landscape::OUParams p;
  p.g0 = cfg.g0;
  p.delta_g = cfg.delta_g;
  p.lambda = cfg.lambda;
  p.dx = cfg.dx;
  p.length = length;
  p.seed = seed;
  return p;
}

double period_mean_g(const landscape::GFactorLandscape& l,
                     const landscape::ShuttleTrajectory& traj) {
  const double period = traj.kind == landscape::TrajectoryKind::Loop
                            ? traj.d / traj.v
                            : 2.0 * traj.d / traj.v;
  return landscape::path_mean(l, traj, period);
}

}  // namespace

int resolved_n_n(const ArchitectureConfig& cfg) {
  if (cfg.n_n >= 0) return cfg.n_n;
  return cfg.kind == ArchKind::TwoByN ? std::max(cfg.n_t - 2, 0) : 0;
}

double resolved_g_shift(const ArchitectureConfig& cfg) {
  if (cfg.g_shift >= 0.0) return cfg.g_shift;
  return mhz_to_rads(300.0) / (cfg.b0 * kMuBOverHbar);
}

Scenario build_2xn_scenario(const ArchitectureConfig& cfg, uint64_t seed) {
  validate_common(cfg);
  if (cfg.kind != ArchKind::TwoByN) {
    throw std::invalid_argument("build_2xn_scenario: cfg.kind must be TwoByN");
  }
  const int n_n = resolved_n_n(cfg);
  const double g = resolved_g_shift(cfg);
  const double length =
      std::max(cfg.d + 12.0 * cfg.dot_sigma, 10.0 * cfg.lambda);

  Scenario s;
  s.cfg = cfg;
  s.cfg.n_n = n_n;
  s.cfg.g_shift = g;
  const int n_q = cfg.n_t + n_n;
  s.qubits.reserve(n_q);
  for (int i = 0; i < n_q; ++i) {
    const uint64_t q_seed = derive_seed(seed, static_cast<uint64_t>(i));
    landscape::GFactorLandscape track = landscape::sample_ou(
        ou_for(cfg, length, q_seed),
        landscape::LandscapeOptions{cfg.dot_sigma, false});
    landscape::ShuttleTrajectory traj;
    traj.kind = landscape::TrajectoryKind::Triangle;
    traj.d = cfg.d;
    traj.v = cfg.v;
    traj.origin = length / 2.0;
    const bool is_target = i < cfg.n_t;
    const double effective = period_mean_g(track, traj);
    s.qubits.push_back(QubitRecord{std::move(track), traj,
                                   is_target ? g : 0.0, is_target, q_seed,
                                   /*loop_index=*/-1, effective});
  }
  return s;
}

Scenario build_loop_scenario(const ArchitectureConfig& cfg, uint64_t seed) {
  validate_common(cfg);
  if (cfg.kind != ArchKind::LoopedPipeline) {
    throw std::invalid_argument("build_loop_scenario: cfg.kind must be LoopedPipeline");
  }
  if (cfg.loops < 1 || cfg.qubits_per_loop < 1) {
    throw std::invalid_argument("build_loop_scenario: loops and qubits_per_loop must be >= 1");
  }
  if (cfg.n_t != cfg.loops * cfg.qubits_per_loop) {
    throw std::invalid_argument(
        "build_loop_scenario: n_t must equal loops * qubits_per_loop");
  }
  if (resolved_n_n(cfg) != 0) {
    throw std::invalid_argument("build_loop_scenario: loops carry no non-targets");
  }

  Scenario s;
  s.cfg = cfg;
  s.cfg.n_n = 0;
  s.cfg.g_shift = resolved_g_shift(cfg);
  s.qubits.reserve(cfg.n_t);
  const double spacing = cfg.d / cfg.qubits_per_loop;
  for (int loop = 0; loop < cfg.loops; ++loop) {
    const uint64_t loop_seed = derive_seed(seed, static_cast<uint64_t>(loop));
    const landscape::GFactorLandscape track = landscape::sample_ou(
        ou_for(cfg, cfg.d, loop_seed),
        landscape::LandscapeOptions{cfg.dot_sigma, true});
    double loop_effective = 0.0;
    for (int m = 0; m < cfg.qubits_per_loop; ++m) {
      landscape::ShuttleTrajectory traj;
      traj.kind = landscape::TrajectoryKind::Loop;
      traj.d = cfg.d;
      traj.v = cfg.v;
      traj.origin = spacing * m;
      // One effective frequency per loop: every member reports the same
      // circumference mean.
      if (m == 0) loop_effective = period_mean_g(track, traj);
      s.qubits.push_back(QubitRecord{track, traj, /*g_shift=*/0.0,
                                     /*is_target=*/true, loop_seed, loop,
                                     loop_effective});
    }
  }
  return s;
}

ShuttlePlan plan_shuttle_drive(const Scenario& s, ShuttleVariant variant) {
  if (s.qubits.empty()) {
    throw std::invalid_argument("plan_shuttle_drive: empty scenario");
  }
  const ArchitectureConfig& cfg = s.cfg;
  const double mu = kMuBOverHbar;
  const double g = resolved_g_shift(cfg);
  const double channel_g0 =
      cfg.kind == ArchKind::TwoByN ? cfg.g0 + g : cfg.g0;

  ShuttlePlan plan;
  plan.variant = variant;
  double rabi = cfg.rabi_nominal;
  if (resolved_n_n(cfg) > 0) {
    // Pull the Rabi rate to the nearest synchronisation point of the
    // target/non-target spacing so spectators complete full loops.
    const double spacing = g * cfg.b0 * mu;
    const double ratio = spacing / cfg.rabi_nominal;
    int p = static_cast<int>(std::llround(0.5 * std::sqrt(ratio * ratio + 1.0)));
    p = std::max(p, 1);
    double best = protocols::sync_omega(spacing, p, protocols::SyncKind::TwoFrequency);
    for (int cand : {p - 1, p + 1}) {
      if (cand < 1) continue;
      const double w = protocols::sync_omega(spacing, cand, protocols::SyncKind::TwoFrequency);
      if (std::abs(w - cfg.rabi_nominal) < std::abs(best - cfg.rabi_nominal)) {
        best = w;
        p = cand;
      }
    }
    rabi = best;
    plan.sync_p = p;
  }

  protocols::DriveTone tone;
  tone.omega = channel_g0 * cfg.b0 * mu;
  tone.rabi = rabi;
  plan.drive.tones = {tone};
  plan.drive.gate_time = kPi / rabi;

  plan.compensation.assign(s.qubits.size(), 0.0);
  if (variant == ShuttleVariant::SigmaZero) {
    for (std::size_t i = 0; i < s.qubits.size(); ++i) {
      plan.compensation[i] =
          (cfg.g0 - s.qubits[i].effective_g) * cfg.b0 * mu;
    }
  }
  return plan;
}

BinningPlan plan_binning_drive(const Scenario& s, int p) {
  if (s.qubits.empty()) {
    throw std::invalid_argument("plan_binning_drive: empty scenario");
  }
  if (p < 1) throw std::invalid_argument("plan_binning_drive: p must be >= 1");
  const ArchitectureConfig& cfg = s.cfg;
  const double mu = kMuBOverHbar;

  BinningPlan plan;
  plan.delta_omega_q = (cfg.delta_g / 10.0) * cfg.b0 * mu;
  plan.omega_ref = cfg.g0 * cfg.b0 * mu;
  if (!(plan.delta_omega_q > 0.0)) {
    throw std::invalid_argument("plan_binning_drive: delta_g must be > 0");
  }

  plan.assigned_bin.resize(s.qubits.size());
  plan.stark_shift.resize(s.qubits.size());
  std::map<int, std::pair<bool, bool>> occupancy;  // bin -> (target, non-target)
  for (std::size_t i = 0; i < s.qubits.size(); ++i) {
    const QubitRecord& q = s.qubits[i];
    const double w_i =
        q.landscape.g_at(q.trajectory.origin) * cfg.b0 * mu;
    const double x = (w_i - plan.omega_ref) / (2.0 * plan.delta_omega_q);
    // Nearest bin index; exact midpoints break toward the reference.
    int k = static_cast<int>(std::llround(x));
    if (std::abs(std::abs(x - std::trunc(x)) - 0.5) < 1e-12) {
      k = static_cast<int>(std::trunc(x));
    }
    plan.assigned_bin[i] = k;
    plan.stark_shift[i] = (plan.omega_ref + 2.0 * k * plan.delta_omega_q) - w_i;
    auto& occ = occupancy[k];
    (q.is_target ? occ.first : occ.second) = true;
  }

  std::set<int> target_bins;
  for (const auto& [bin, occ] : occupancy) {
    if (occ.first && occ.second) {
      throw PlanningError("plan_binning_drive: bin " + std::to_string(bin) +
                          " holds both a target and a non-target");
    }
    if (occ.first) target_bins.insert(bin);
  }

  const double rabi = plan.delta_omega_q / p;
  for (int bin : target_bins) {
    const double centre = plan.omega_ref + 2.0 * bin * plan.delta_omega_q;
    plan.tone_centers.push_back(centre);
    plan.drive.tones.push_back(protocols::DriveTone{centre, rabi, 0.0});
  }
  plan.drive.gate_time = kPi / rabi;
  return plan;
}

namespace {

ScenarioResult score(const Scenario& s, std::vector<double> infid) {
  ScenarioResult r;
  r.qubit_infidelity = std::move(infid);
  double log_sum = 0.0;
  double target_sum = 0.0, nontarget_sum = 0.0;
  int n_target = 0, n_nontarget = 0;
  for (std::size_t i = 0; i < s.qubits.size(); ++i) {
    const double f = std::clamp(1.0 - r.qubit_infidelity[i], 0.0, 1.0);
    log_sum += std::log(std::max(f, 1e-300));
    if (s.qubits[i].is_target) {
      target_sum += r.qubit_infidelity[i];
      ++n_target;
    } else {
      nontarget_sum += r.qubit_infidelity[i];
      ++n_nontarget;
    }
  }
  const double n_q = static_cast<double>(s.qubits.size());
  r.device_fidelity = std::exp(log_sum / n_q);
  r.device_infidelity = 1.0 - r.device_fidelity;
  r.mean_target_infidelity = n_target ? target_sum / n_target : 0.0;
  r.mean_nontarget_infidelity = n_nontarget ? nontarget_sum / n_nontarget : 0.0;
  return r;
}

}  // namespace

ScenarioResult simulate_scenario(const Scenario& s, const ShuttlePlan& plan,
                                 const protocols::SimOptions& opts) {
  if (plan.compensation.size() != s.qubits.size()) {
    throw std::invalid_argument(
        "simulate_scenario: plan does not match scenario size");
  }
  std::vector<double> infid(s.qubits.size());
  for (std::size_t i = 0; i < s.qubits.size(); ++i) {
    const QubitRecord& q = s.qubits[i];
    infid[i] = protocols::simulate_qubit(q.landscape, q.trajectory, plan.drive,
                                         s.cfg.b0, q.g_shift,
                                         plan.compensation[i], q.is_target,
                                         opts)
                   .infidelity;
  }
  return score(s, std::move(infid));
}

ScenarioResult simulate_scenario(const Scenario& s, const BinningPlan& plan,
                                 const protocols::SimOptions& opts) {
  if (plan.stark_shift.size() != s.qubits.size()) {
    throw std::invalid_argument(
        "simulate_scenario: plan does not match scenario size");
  }
  std::vector<double> infid(s.qubits.size());
  for (std::size_t i = 0; i < s.qubits.size(); ++i) {
    const QubitRecord& q = s.qubits[i];
    landscape::ShuttleTrajectory at_rest;
    at_rest.kind = landscape::TrajectoryKind::Static;
    at_rest.origin = q.trajectory.origin;
    infid[i] = protocols::simulate_qubit(q.landscape, at_rest, plan.drive,
                                         s.cfg.b0, 0.0, plan.stark_shift[i],
                                         q.is_target, opts)
                   .infidelity;
  }
  return score(s, std::move(infid));
}

std::string scenario_to_json(const Scenario& s) {
  nlohmann::json j;
  j["kind"] = s.cfg.kind == ArchKind::TwoByN ? "two_by_n" : "looped_pipeline";
  j["n_t"] = s.cfg.n_t;
  j["n_n"] = resolved_n_n(s.cfg);
  j["b0_tesla"] = s.cfg.b0;
  j["delta_g"] = s.cfg.delta_g;
  j["g_shift"] = resolved_g_shift(s.cfg);
  j["d_m"] = s.cfg.d;
  j["v_mps"] = s.cfg.v;
  j["rabi_nominal"] = s.cfg.rabi_nominal;
  j["g0"] = s.cfg.g0;
  j["lambda_m"] = s.cfg.lambda;
  if (s.cfg.kind == ArchKind::LoopedPipeline) {
    j["loops"] = s.cfg.loops;
    j["qubits_per_loop"] = s.cfg.qubits_per_loop;
  }
  nlohmann::json qubits = nlohmann::json::array();
  for (const QubitRecord& q : s.qubits) {
    nlohmann::json e;
    e["seed"] = q.seed;
    e["is_target"] = q.is_target;
    e["g_shift"] = q.g_shift;
    e["origin_m"] = q.trajectory.origin;
    e["effective_g"] = q.effective_g;
    if (q.loop_index >= 0) e["loop"] = q.loop_index;
    qubits.push_back(std::move(e));
  }
  j["qubits"] = std::move(qubits);
  return j.dump(2);
}

std::string shuttle_plan_to_json(const ShuttlePlan& p) {
  nlohmann::json j;
  j["variant"] = p.variant == ShuttleVariant::SigmaZero ? "sigma_zero"
                                                        : "sigma_positive";
  j["tone_omega"] = p.drive.tones.at(0).omega;
  j["rabi"] = p.drive.tones.at(0).rabi;
  j["gate_time_s"] = p.drive.gate_time;
  j["sync_p"] = p.sync_p;
  j["compensation"] = p.compensation;
  return j.dump(2);
}

std::string binning_plan_to_json(const BinningPlan& p) {
  nlohmann::json j;
  j["delta_omega_q"] = p.delta_omega_q;
  j["omega_ref"] = p.omega_ref;
  j["rabi"] = p.drive.tones.empty() ? 0.0 : p.drive.tones.front().rabi;
  j["gate_time_s"] = p.drive.gate_time;
  j["assigned_bin"] = p.assigned_bin;
  j["stark_shift"] = p.stark_shift;
  j["tone_centers"] = p.tone_centers;
  return j.dump(2);
}

}  // namespace spinmotion::architectures
