#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spinmotion/landscape.hpp"
#include "spinmotion/qdyn.hpp"

namespace spinmotion::protocols {

// One drive tone. omega: carrier (rad/s). rabi: Rabi rate Omega (rad/s),
// defined so a resonant X gate takes pi / rabi. phase in radians.
struct DriveTone {
  double omega = 0.0;
  double rabi = 0.0;
  double phase = 0.0;
};

// A complete drive: simulations rotate at tones[0].omega and keep the other
// tones' difference-frequency terms (only the sum-frequency halves are
// dropped). rotating_frame = false propagates the full cos(w t) drive.
struct DrivePlan {
  std::vector<DriveTone> tones;
  double gate_time = 0.0;
  bool rotating_frame = true;
};

struct SimOptions {
  int n_steps = 0;         // 0 = automatic
  bool lab_frame = false;  // cross-check mode: no rotating-wave reduction
  bool scale_drive_by_local_g = false;  // Rabi follows g(x)/g0 along the path
  double carrier = 0.0;    // lab-frame carrier override (rad/s, 0 = auto)
};

// ---------------------------------------------------------------------------
// Exchange-coupled pair: simultaneous X on both spins with always-on J.
// Synchronisation condition J = 2 p Omega.
struct ExchangeConfig {
  double omega12 = 0.0;  // splitting difference between the two spins (rad/s)
  double j = 0.0;        // exchange strength (rad/s)
  double rabi = 0.0;     // Omega (rad/s)
  int p = 0;             // sync integer
  bool enforce_sync = true;  // require |j - 2 p rabi| <= 1e-9 j
};

struct TwoQubitResult {
  Eigen::Matrix4cd u;        // rotating-frame propagator
  double infidelity = 0.0;   // 1 - F vs X (x) X
};

TwoQubitResult exchange_gate_sim(const ExchangeConfig& cfg,
                                 const SimOptions& opts = {});

struct TimeTrace {
  std::vector<double> t;
  std::vector<double> sz1;  // <sigma_z x I>
  std::vector<double> sz2;  // <I x sigma_z>
};

// Expectation traces over one gate (duration pi / rabi) from the product
// state |0> x (sqrt(3)/2 |0> + 1/2 |1>), sampled every sample_period
// seconds starting at t = 0. sample_period = 2 pi / J gives the
// stroboscopic trace that filters out the exchange oscillation.
TimeTrace exchange_time_trace(const ExchangeConfig& cfg, double sample_period);

// ---------------------------------------------------------------------------
// Double-dot tunneling during an X gate (charge (x) spin, 4 levels).
// Synchronisation condition t_c = 2 p Omega.
struct TunnelConfig {
  double omega12 = 0.0;  // spin splitting difference between the dots (rad/s)
  double t_c = 0.0;      // tunnel splitting: charge oscillation rate (rad/s)
  double rabi = 0.0;
  double epsilon = 0.0;  // charge detuning (rad/s)
  int p = 0;
  bool enforce_sync = true;
};

struct TunnelResult {
  Eigen::Matrix4cd u;           // basis |L0 L1 R0 R1>
  Eigen::Matrix2cd spin_block;  // <L| U |L>
  double infidelity = 0.0;      // spin-block infidelity vs X, leakage included
  double postselected_infidelity = 0.0;  // renormalised by charge_return
  double charge_return = 0.0;   // mean probability charge ends in |L>
  bool charge_return_ok = true;  // false when charge_return < 0.999
};

TunnelResult tunnel_gate_sim(const TunnelConfig& cfg,
                             const SimOptions& opts = {});

// How much larger the accessible detuning range is when shifting every
// qubit onto a shared grid instead of pushing pairs apart:
// 1 / (2 stark_fraction). stark_fraction is the Stark range as a fraction
// of the full spread (delta_g kept for the call-site record).
double tunability_gain(double delta_g, double stark_fraction);

// ---------------------------------------------------------------------------
// Shuttled single-qubit gate.
// PathMean: drive at the trajectory-averaged frequency g_bar B0 (requires
// landscape knowledge). DeviceMean: drive at the nominal g0 B0.
enum class DriveMode { PathMean, DeviceMean };

struct QubitSimResult {
  Eigen::Matrix2cd u;
  double infidelity = 0.0;
};

// General single-spin engine: splitting (g(x(t)) + g_shift) B0 mu_B/hbar
// + extra_omega, driven by every tone in the plan. Scored against X
// (target_is_x) or identity after strip_z. Non-periodic landscapes must
// contain the whole trajectory with a 3 dot_sigma margin.
QubitSimResult simulate_qubit(const landscape::GFactorLandscape& l,
                              const landscape::ShuttleTrajectory& traj,
                              const DrivePlan& plan, double b0, double g_shift,
                              double extra_omega, bool target_is_x,
                              const SimOptions& opts = {});

struct ShuttledXResult {
  Eigen::Matrix2cd u;
  double infidelity = 0.0;
  double drive_omega = 0.0;  // carrier actually used (rad/s)
};

// Single-tone X gate while shuttling. tone.omega = 0 lets the mode pick the
// carrier; a nonzero tone.omega overrides it. Gate time pi / tone.rabi.
ShuttledXResult shuttled_x_gate_sim(const landscape::GFactorLandscape& l,
                                    const landscape::ShuttleTrajectory& traj,
                                    const DriveTone& tone, double b0,
                                    DriveMode mode,
                                    const SimOptions& opts = {});

// ---------------------------------------------------------------------------
// Shuttled two-qubit CROT: both spins follow the same trajectory over their
// own landscapes, exchange J0 constant, qubit 2 offset by the dimensionless
// shift G. A single tone resonant with the |11> <-> |10> branch implements
// a CNOT (control = qubit 1, active on |1>).
struct CrotConfig {
  double g_shift = 0.0;  // dimensionless G on qubit 2
  double j0 = 0.0;       // exchange (rad/s); keep j0 << G B0 mu
  double rabi = 0.0;     // bare Omega (rad/s)
  double b0 = 0.0;       // tesla
  DriveMode mode = DriveMode::DeviceMean;
};

struct CrotResult {
  Eigen::Matrix4cd u;            // rotating-frame propagator
  double infidelity = 0.0;       // 1 - F vs CNOT after per-qubit virtual Z
  double drive_omega = 0.0;      // rad/s
  double rabi_effective = 0.0;   // exchange-dressed Rabi rate actually used
  bool j0_ratio_warning = false;  // j0 > 0.2 G B0 mu
};

CrotResult shuttled_crot_sim(const landscape::GFactorLandscape& l1,
                             const landscape::GFactorLandscape& l2,
                             const CrotConfig& cfg,
                             const landscape::ShuttleTrajectory& traj,
                             const SimOptions& opts = {});

// ---------------------------------------------------------------------------
// Crosstalk synchronisation. TwoFrequency: a spectator detuned by exactly
// `spacing` completes 2 pi p rotations during the pi pulse when
// Omega = spacing / sqrt(4 p^2 - 1). Bins: Omega = spacing / p.
enum class SyncKind { TwoFrequency, Bins };

double sync_omega(double spacing, int p, SyncKind kind);

// Identity infidelity (after strip_z) of a spectator detuned by `spacing`
// during one pi pulse. omega_override = 0 uses the synchronised Rabi rate;
// any other value probes a detuned drive.
double sync_crosstalk_check(double spacing, int p, double omega_override = 0.0);

// ---------------------------------------------------------------------------
// Anisotropic g-tensor of a single dot. The in-plane drive picks up a tilt
// theta = atan(beta / (g0 + alpha)) away from x and a rescaled amplitude;
// phase_correction = -theta restores a pure sigma_x drive.
struct GTensor {
  double g0 = 1.994;
  double alpha = -1e-3;
  double beta = 1e-2;
  double g13 = 1e-3;
  double g23 = 1e-3;
  double g33 = 2.002;
};

struct GTensorAxis {
  double theta = 0.0;
  double b1_eff = 0.0;
  double phase_correction = 0.0;
};

GTensorAxis gtensor_axis(const GTensor& g, double b1);

// ---------------------------------------------------------------------------
// Design-point estimator: smallest shuttling distance, speed and target
// shift meeting an infidelity target, from the closed-form quantile model
//   sigma(d) = delta_g B0 mu sqrt(lambda / d),
//   d_min    = lambda (q sigma_0 / Omega)^2 (1/target - 1),
//   v_min    = Omega d_min / pi,
//   G_min B0 = Omega sqrt(1/target - 1).
// v_min_cycles is v_min / 2 pi: the value obtained when every frequency in
// the model is read as an ordinary frequency instead of an angular one.
struct ParamEstimate {
  double d_min = 0.0;         // m
  double v_min = 0.0;         // m/s, angular-frequency reading
  double v_min_cycles = 0.0;  // m/s, ordinary-frequency reading
  double g_min = 0.0;         // dimensionless G
  double g_min_b0 = 0.0;      // rad/s
  double sigma_at_d = 0.0;    // rad/s, residual spread at d_min
  double i1 = 0.0;            // quantile detuning infidelity at d_min
  double i2 = 0.0;            // non-target crosstalk infidelity at G_min
};

ParamEstimate estimate_parameters(double delta_g, double b0, double rabi,
                                  double lambda, double target,
                                  double quantile_factor = 2.0);

}  // namespace spinmotion::protocols
