#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spinmotion/constants.hpp"
#include "spinmotion/landscape.hpp"
#include "spinmotion/protocols.hpp"

namespace spinmotion::architectures {

// Device-level studies: many qubits, one global drive. TwoByN holds targets
// on a top row (frequency-shifted by G) and non-targets on a bottom row;
// LoopedPipeline holds n_t qubits on closed shuttling loops, one shared
// landscape per loop.
enum class ArchKind { TwoByN, LoopedPipeline };

struct ArchitectureConfig {
  ArchKind kind = ArchKind::TwoByN;
  int n_t = 8;    // target count
  int n_n = -1;   // non-target count; -1 = default (n_t - 2 for TwoByN, 0 for loops)
  double b0 = 0.1;        // tesla
  double delta_g = 2e-3;  // absolute g-factor std of the landscape
  // Dimensionless target shift G; -1 = default chosen so G*b0*mu
  // = 2 pi * 300 MHz.
  double g_shift = -1.0;
  double d = 3e-6;   // one-way shuttle distance (TwoByN) / circumference (loops)
  double v = 10.0;   // m/s
  double rabi_nominal = mhz_to_rads(5.0);
  int qubits_per_loop = 2;  // LoopedPipeline only
  int loops = 4;            // LoopedPipeline only; n_t must equal loops*qubits_per_loop
  double g0 = 2.0;
  double lambda = 20e-9;
  double dx = 1e-9;
  double dot_sigma = 7e-9;
};

// Effective values of the -1 sentinels above.
int resolved_n_n(const ArchitectureConfig& cfg);
double resolved_g_shift(const ArchitectureConfig& cfg);

struct QubitRecord {
  landscape::GFactorLandscape landscape;
  landscape::ShuttleTrajectory trajectory;
  double g_shift = 0.0;  // dimensionless shift added to this qubit's g
  bool is_target = false;
  uint64_t seed = 0;      // landscape seed (loop members share their loop's)
  int loop_index = -1;    // -1 outside LoopedPipeline
  // Homogenised g over one full trajectory period (loop members share one
  // value per loop by construction).
  double effective_g = 0.0;
};

struct Scenario {
  ArchitectureConfig cfg;
  std::vector<QubitRecord> qubits;  // targets first, then non-targets
};

// One landscape per qubit (seeds derive_seed(seed, i)), triangle trajectories
// of one-way distance d centred in the landscape, targets carry the +G shift.
Scenario build_2xn_scenario(const ArchitectureConfig& cfg, uint64_t seed);

// One periodic landscape per loop (circumference d, seeds derive_seed(seed,
// loop)); members start at staggered offsets d/qubits_per_loop apart. All
// qubits are targets.
Scenario build_loop_scenario(const ArchitectureConfig& cfg, uint64_t seed);

// SigmaPositive: one tone at the nominal channel frequency, landscape
// dispersion left in place. SigmaZero: additionally gives every qubit the
// compensating frequency shift (g0 - effective_g)*b0*mu that pins its
// channel exactly (per loop in pipelines, per qubit otherwise).
enum class ShuttleVariant { SigmaPositive, SigmaZero };

struct ShuttlePlan {
  protocols::DrivePlan drive;        // a single global tone
  std::vector<double> compensation;  // per-qubit extra angular shift (rad/s)
  int sync_p = 0;                    // two-frequency sync integer (0 = none)
  ShuttleVariant variant = ShuttleVariant::SigmaPositive;
};

// Tone at (g0+G)*b0*mu for TwoByN (the target channel) or g0*b0*mu for
// loops. With non-targets present the Rabi rate is pulled to the nearest
// two-frequency synchronisation point of the G*b0*mu spacing; otherwise it
// stays at rabi_nominal.
ShuttlePlan plan_shuttle_drive(const Scenario& s, ShuttleVariant variant);

// Static (no-shuttling) baseline: qubits sit at their trajectory origin and
// are Stark-shifted onto a grid of shared-frequency bins.
struct BinningPlan {
  double delta_omega_q = 0.0;  // bin half-spacing = (delta_g/10)*b0*mu (rad/s)
  double omega_ref = 0.0;      // g0*b0*mu (rad/s); bin k centre = ref + 2k*dw
  std::vector<int> assigned_bin;     // per-qubit bin index k
  std::vector<double> stark_shift;   // per-qubit shift applied (rad/s)
  std::vector<double> tone_centers;  // occupied target-bin centres (rad/s)
  protocols::DrivePlan drive;        // one tone per occupied target bin
};

// Assigns every qubit to its nearest bin centre (|shift| <= delta_omega_q;
// ties break toward the reference frequency) and places one tone of Rabi
// rate delta_omega_q/p at every bin holding a target. The target shift G
// plays no role here: binning addresses qubits by their static dot
// frequencies. The convention for this baseline is b0 = 1 T (caller sets
// cfg.b0). Throws PlanningError when a target and a non-target land in the
// same bin (the instance counts as failed).
BinningPlan plan_binning_drive(const Scenario& s, int p);

struct ScenarioResult {
  std::vector<double> qubit_infidelity;
  double device_fidelity = 1.0;  // geometric mean of per-qubit fidelities
  double device_infidelity = 0.0;
  double mean_target_infidelity = 0.0;
  double mean_nontarget_infidelity = 0.0;
};

// Every tone of the plan is applied to every qubit (that is what creates
// crosstalk); targets are scored against X, non-targets against identity,
// both after Z-stripping. Device fidelity is the geometric mean.
ScenarioResult simulate_scenario(const Scenario& s, const ShuttlePlan& plan,
                                 const protocols::SimOptions& opts = {});

// Binning runs the qubits statically at their trajectory origins with their
// Stark shifts applied.
ScenarioResult simulate_scenario(const Scenario& s, const BinningPlan& plan,
                                 const protocols::SimOptions& opts = {});

// Compact JSON descriptions (landscapes referenced by seed, not inlined).
std::string scenario_to_json(const Scenario& s);
std::string shuttle_plan_to_json(const ShuttlePlan& p);
std::string binning_plan_to_json(const BinningPlan& p);

}  // namespace spinmotion::architectures
