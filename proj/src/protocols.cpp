#include "spinmotion/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "spinmotion/constants.hpp"

namespace spinmotion::protocols {

using Eigen::Matrix2cd;
using Eigen::Matrix4cd;
using qdyn::complexd;

namespace {

constexpr complexd kI{0.0, 1.0};

Matrix4cd heisenberg_term() {
  const Matrix2cd sx = qdyn::pauli_x();
  const Matrix2cd sy = qdyn::pauli_y();
  const Matrix2cd sz = qdyn::pauli_z();
  return qdyn::kron2(sx, sx) + qdyn::kron2(sy, sy) + qdyn::kron2(sz, sz);
}

void check_sync(double value, double rabi, int p, bool enforce, const char* name) {
  if (!(rabi > 0.0)) throw std::invalid_argument("protocols: rabi must be positive");
  if (!enforce) return;
  if (p < 1) throw std::invalid_argument("protocols: sync integer p must be >= 1");
  const double want = 2.0 * p * rabi;
  if (std::abs(value - want) > 1e-9 * std::max(std::abs(value), want)) {
    throw std::invalid_argument(std::string("protocols: ") + name +
                                " must equal 2 p rabi when sync is enforced");
  }
}

int auto_steps_const(const SimOptions& opts, int fallback) {
  return opts.n_steps > 0 ? opts.n_steps : fallback;
}

double lab_carrier(const SimOptions& opts, double scale) {
  return opts.carrier > 0.0 ? opts.carrier : 128.0 * scale;
}

Matrix4cd rotate_back_pair(const Matrix4cd& u_lab, double carrier, double t) {
  const Matrix2cd r = qdyn::rot_z(-carrier * t);  // exp(+i carrier t sz / 2)
  return qdyn::kron2(r, r) * u_lab;
}

// Coordinate hill-climb for |a0 e^{-iu} + a3 e^{iu} + a1 e^{-iw} + a2 e^{iw}|.
double max_over_virtual_z(const Eigen::Vector4cd& a) {
  auto f = [&](double u, double w) {
    const complexd eu(std::cos(u), std::sin(u));
    const complexd ew(std::cos(w), std::sin(w));
    return std::abs(a(0) * std::conj(eu) + a(3) * eu + a(1) * std::conj(ew) +
                    a(2) * ew);
  };
  const int grid = 64;
  double best = -1.0, bu = 0.0, bw = 0.0;
  for (int i = 0; i < grid; ++i) {
    for (int j = 0; j < grid; ++j) {
      const double u = kTwoPi * i / grid;
      const double w = kTwoPi * j / grid;
      const double v = f(u, w);
      if (v > best) {
        best = v;
        bu = u;
        bw = w;
      }
    }
  }
  double h = kTwoPi / grid;
  while (h > 1e-11) {
    bool moved = false;
    for (int du = -1; du <= 1; ++du) {
      for (int dw = -1; dw <= 1; ++dw) {
        const double v = f(bu + du * h, bw + dw * h);
        if (v > best) {
          best = v;
          bu += du * h;
          bw += dw * h;
          moved = true;
        }
      }
    }
    if (!moved) h *= 0.5;
  }
  return best;
}

struct TrajectorySpan {
  double lo = 0.0;
  double hi = 0.0;
};

TrajectorySpan trajectory_span(const landscape::ShuttleTrajectory& traj) {
  switch (traj.kind) {
    case landscape::TrajectoryKind::Static:
      return {traj.origin, traj.origin};
    case landscape::TrajectoryKind::Triangle:
      return {traj.origin - traj.d / 2.0, traj.origin + traj.d / 2.0};
    case landscape::TrajectoryKind::Loop:
      return {0.0, traj.d};
  }
  throw std::invalid_argument("trajectory_span: unknown trajectory kind");
}

void check_trajectory_fits(const landscape::GFactorLandscape& l,
                           const landscape::ShuttleTrajectory& traj) {
  if (l.periodic()) return;
  const TrajectorySpan span = trajectory_span(traj);
  const double margin = 3.0 * l.dot_sigma();
  const double slack = 1e-12 * l.length();
  if (span.lo < margin - slack || span.hi > l.length() - margin + slack) {
    throw std::out_of_range(
        "simulate_qubit: trajectory leaves the landscape (3 dot_sigma margin)");
  }
}

}  // namespace

TwoQubitResult exchange_gate_sim(const ExchangeConfig& cfg,
                                 const SimOptions& opts) {
  check_sync(cfg.j, cfg.rabi, cfg.p, cfg.enforce_sync, "j");
  if (cfg.j < 0.0) throw std::invalid_argument("exchange_gate_sim: j must be >= 0");
  const double t_gate = kPi / cfg.rabi;
  const Matrix2cd sx = qdyn::pauli_x();
  const Matrix2cd sz = qdyn::pauli_z();
  const Matrix2cd id = Matrix2cd::Identity();
  const Matrix4cd heis = heisenberg_term();
  qdyn::HamiltonianTrace trace;
  trace.dim = 4;
  trace.duration = t_gate;
  Matrix4cd u;
  if (!opts.lab_frame) {
    const Matrix4cd h = 0.25 * cfg.omega12 * (qdyn::kron2(sz, id) - qdyn::kron2(id, sz)) +
                        0.5 * cfg.rabi * (qdyn::kron2(sx, id) + qdyn::kron2(id, sx)) +
                        0.25 * cfg.j * heis;
    trace.n_steps = auto_steps_const(opts, 16);
    trace.h4 = [&h](double) { return h; };
    u = qdyn::propagate(trace);
  } else {
    const double carrier =
        lab_carrier(opts, std::max({cfg.j, cfg.rabi, std::abs(cfg.omega12)}));
    const double w1 = carrier + cfg.omega12 / 2.0;
    const double w2 = carrier - cfg.omega12 / 2.0;
    const Matrix4cd zeeman =
        0.5 * w1 * qdyn::kron2(sz, id) + 0.5 * w2 * qdyn::kron2(id, sz);
    const Matrix4cd xall = qdyn::kron2(sx, id) + qdyn::kron2(id, sx);
    const Matrix4cd hj = 0.25 * cfg.j * heis;
    trace.n_steps = opts.n_steps > 0
                        ? opts.n_steps
                        : std::max(20000L, std::lround(48.0 * t_gate * carrier / kTwoPi));
    trace.h4 = [&](double t) -> Matrix4cd {
      return zeeman + hj + cfg.rabi * std::cos(carrier * t) * xall;
    };
    u = rotate_back_pair(qdyn::propagate(trace), carrier, t_gate);
  }
  const Matrix4cd target = qdyn::kron2(sx, sx);
  TwoQubitResult out;
  out.u = u;
  out.infidelity = 1.0 - qdyn::average_fidelity(u, target, 2, false);
  return out;
}

TimeTrace exchange_time_trace(const ExchangeConfig& cfg, double sample_period) {
  check_sync(cfg.j, cfg.rabi, cfg.p, cfg.enforce_sync, "j");
  if (!(sample_period > 0.0)) {
    throw std::invalid_argument("exchange_time_trace: sample_period must be positive");
  }
  const double t_gate = kPi / cfg.rabi;
  const Matrix2cd sx = qdyn::pauli_x();
  const Matrix2cd sz = qdyn::pauli_z();
  const Matrix2cd id = Matrix2cd::Identity();
  const Matrix4cd h = 0.25 * cfg.omega12 * (qdyn::kron2(sz, id) - qdyn::kron2(id, sz)) +
                      0.5 * cfg.rabi * (qdyn::kron2(sx, id) + qdyn::kron2(id, sx)) +
                      0.25 * cfg.j * heisenberg_term();
  const Matrix4cd u_step = qdyn::step_exp_4(h, sample_period);
  Eigen::Vector4cd psi;
  psi << std::sqrt(3.0) / 2.0, 0.5, 0.0, 0.0;
  TimeTrace trace;
  const long n = std::lround(std::floor(t_gate / sample_period * (1.0 + 1e-12)));
  trace.t.reserve(n + 1);
  for (long k = 0; k <= n; ++k) {
    const double p00 = std::norm(psi(0));
    const double p01 = std::norm(psi(1));
    const double p10 = std::norm(psi(2));
    const double p11 = std::norm(psi(3));
    trace.t.push_back(k * sample_period);
    trace.sz1.push_back(p00 + p01 - p10 - p11);
    trace.sz2.push_back(p00 - p01 + p10 - p11);
    psi = u_step * psi;
  }
  return trace;
}

TunnelResult tunnel_gate_sim(const TunnelConfig& cfg, const SimOptions& opts) {
  check_sync(cfg.t_c, cfg.rabi, cfg.p, cfg.enforce_sync, "t_c");
  if (cfg.t_c < 0.0) throw std::invalid_argument("tunnel_gate_sim: t_c must be >= 0");
  const double t_gate = kPi / cfg.rabi;
  const Matrix2cd sx = qdyn::pauli_x();
  const Matrix2cd sz = qdyn::pauli_z();
  const Matrix2cd id = Matrix2cd::Identity();
  // Charge factor first, spin factor second: basis |L0 L1 R0 R1>. t_c is the
  // charge gap at zero detuning: the coupling element is t_c/2, so the charge
  // population oscillates at angular frequency t_c and t_c = 2 p Omega puts
  // exactly p full oscillations inside the gate.
  const Matrix4cd h_static = 0.25 * cfg.omega12 * qdyn::kron2(sz, sz) +
                             cfg.epsilon * qdyn::kron2(sz, id) +
                             0.5 * cfg.t_c * qdyn::kron2(sx, id);
  qdyn::HamiltonianTrace trace;
  trace.dim = 4;
  trace.duration = t_gate;
  Matrix4cd u;
  if (opts.lab_frame) {
    // Full cosine drive at the carrier; no rotating-wave reduction. The
    // counter-rotating terms matter here: they break the exact stroboscopic
    // rephasing of the charge-conditioned spin phase that the co-rotating
    // model enjoys, so deep-suppression scaling differs between the frames.
    const double carrier =
        opts.carrier > 0.0
            ? opts.carrier
            : 128.0 * std::max({cfg.omega12, cfg.t_c, cfg.rabi});
    const Matrix4cd h0 =
        h_static + 0.5 * carrier * qdyn::kron2(id, sz);
    const Matrix4cd hd = qdyn::kron2(id, sx);
    trace.h4 = [&](double t) -> Matrix4cd {
      return h0 + (cfg.rabi * std::cos(carrier * t)) * hd;
    };
    const double fastest = std::max(carrier, cfg.t_c);
    long n = std::max<long>(
        20000, std::lround(std::ceil(48.0 * t_gate * fastest / kTwoPi)));
    if (opts.n_steps > 0) n = opts.n_steps;
    trace.n_steps = static_cast<int>(n);
    u = (qdyn::kron2(id, qdyn::rot_z(-carrier * t_gate)) * qdyn::propagate(trace))
            .eval();
  } else {
    const Matrix4cd h = h_static + 0.5 * cfg.rabi * qdyn::kron2(id, sx);
    trace.n_steps = auto_steps_const(opts, 16);
    trace.h4 = [&h](double) { return h; };
    u = qdyn::propagate(trace);
  }
  TunnelResult out;
  out.u = u;
  out.spin_block = u.block<2, 2>(0, 0);
  out.charge_return =
      0.5 * (out.spin_block.adjoint() * out.spin_block).trace().real();
  out.charge_return_ok = out.charge_return >= 0.999;
  // Headline infidelity: fidelity of the charge-return spin block against X,
  // amplitude-weighted, so charge leakage counts as gate error. The
  // renormalised (post-selected) figure is reported alongside.
  const complexd tr = (qdyn::pauli_x() * out.spin_block).trace();
  const double fid = std::clamp(std::norm(tr) / 4.0, 0.0, 1.0);
  out.infidelity = 1.0 - fid;
  out.postselected_infidelity =
      out.charge_return < 1e-12
          ? 1.0
          : 1.0 - std::clamp(std::norm(tr) / (4.0 * out.charge_return), 0.0, 1.0);
  return out;
}

double tunability_gain(double delta_g, double stark_fraction) {
  if (delta_g < 0.0) {
    throw std::invalid_argument("tunability_gain: delta_g must be >= 0");
  }
  if (!(stark_fraction > 0.0)) {
    throw std::invalid_argument("tunability_gain: stark_fraction must be positive");
  }
  return 1.0 / (2.0 * stark_fraction);
}

QubitSimResult simulate_qubit(const landscape::GFactorLandscape& l,
                              const landscape::ShuttleTrajectory& traj,
                              const DrivePlan& plan, double b0, double g_shift,
                              double extra_omega, bool target_is_x,
                              const SimOptions& opts) {
  if (plan.tones.empty()) {
    throw std::invalid_argument("simulate_qubit: plan has no tones");
  }
  if (!(plan.gate_time > 0.0)) {
    throw std::invalid_argument("simulate_qubit: gate_time must be positive");
  }
  if (!(b0 > 0.0)) throw std::invalid_argument("simulate_qubit: b0 must be positive");
  check_trajectory_fits(l, traj);
  const double t_gate = plan.gate_time;
  const double g0 = l.params().g0;
  const bool lab = opts.lab_frame || !plan.rotating_frame;
  const double w_ref = plan.tones[0].omega;

  double max_diff = 0.0, max_abs = 0.0;
  for (const auto& tone : plan.tones) {
    if (tone.rabi < 0.0) {
      throw std::invalid_argument("simulate_qubit: tone rabi must be >= 0");
    }
    max_diff = std::max(max_diff, std::abs(tone.omega - w_ref));
    max_abs = std::max(max_abs, std::abs(tone.omega));
  }
  long n = 2000;
  if (traj.kind != landscape::TrajectoryKind::Static) {
    n = std::max(n, std::lround(std::ceil(2.0 * traj.v * t_gate / l.dx())));
  }
  n = std::max(n, std::lround(std::ceil(48.0 * t_gate * max_diff / kTwoPi)));
  if (lab) {
    n = std::max({n, 20000L, std::lround(std::ceil(48.0 * t_gate * max_abs / kTwoPi))});
  }
  if (opts.n_steps > 0) n = opts.n_steps;

  const double mu = kMuBOverHbar;
  qdyn::HamiltonianTrace trace;
  trace.dim = 2;
  trace.duration = t_gate;
  trace.n_steps = static_cast<int>(n);
  trace.h2 = [&](double t) -> Matrix2cd {
    const double g = l.g_at(landscape::position(traj, t));
    const double w_q = (g + g_shift) * b0 * mu + extra_omega;
    const double scale = opts.scale_drive_by_local_g ? g / g0 : 1.0;
    double ax = 0.0, ay = 0.0;
    if (lab) {
      for (const auto& tone : plan.tones) {
        ax += tone.rabi * scale * std::cos(tone.omega * t + tone.phase);
      }
      Matrix2cd h;
      h << 0.5 * w_q, ax, ax, -0.5 * w_q;
      return h;
    }
    for (const auto& tone : plan.tones) {
      const double arg = (tone.omega - w_ref) * t + tone.phase;
      const double amp = 0.5 * tone.rabi * scale;
      ax += amp * std::cos(arg);
      ay += amp * std::sin(arg);
    }
    const double delta = w_q - w_ref;
    Matrix2cd h;
    h << 0.5 * delta, complexd(ax, -ay), complexd(ax, ay), -0.5 * delta;
    return h;
  };
  Matrix2cd u = qdyn::propagate(trace);
  if (lab) {
    u = (qdyn::rot_z(-w_ref * t_gate) * u).eval();  // back to the drive frame
  }
  QubitSimResult out;
  out.u = u;
  const Matrix2cd target = target_is_x ? qdyn::pauli_x() : Matrix2cd::Identity();
  out.infidelity = 1.0 - qdyn::average_fidelity(u, target, 1, true);
  return out;
}

ShuttledXResult shuttled_x_gate_sim(const landscape::GFactorLandscape& l,
                                    const landscape::ShuttleTrajectory& traj,
                                    const DriveTone& tone, double b0,
                                    DriveMode mode, const SimOptions& opts) {
  if (!(tone.rabi > 0.0)) {
    throw std::invalid_argument("shuttled_x_gate_sim: tone.rabi must be positive");
  }
  const double t_gate = kPi / tone.rabi;
  double w_drive = tone.omega;
  if (w_drive == 0.0) {
    // PathMean drives at the mean frequency the qubit exhibits over the gate
    // window itself (the calibration a resonance sweep along x(t) would find).
    const double g_ref = (mode == DriveMode::PathMean)
                             ? landscape::path_mean(l, traj, t_gate)
                             : l.params().g0;
    w_drive = g_ref * b0 * kMuBOverHbar;
  }
  DrivePlan plan;
  plan.tones = {DriveTone{w_drive, tone.rabi, tone.phase}};
  plan.gate_time = t_gate;
  const QubitSimResult sim =
      simulate_qubit(l, traj, plan, b0, 0.0, 0.0, true, opts);
  ShuttledXResult out;
  out.u = sim.u;
  out.infidelity = sim.infidelity;
  out.drive_omega = w_drive;
  return out;
}

CrotResult shuttled_crot_sim(const landscape::GFactorLandscape& l1,
                             const landscape::GFactorLandscape& l2,
                             const CrotConfig& cfg,
                             const landscape::ShuttleTrajectory& traj,
                             const SimOptions& opts) {
  if (!(cfg.rabi > 0.0)) {
    throw std::invalid_argument("shuttled_crot_sim: rabi must be positive");
  }
  if (!(cfg.b0 > 0.0)) {
    throw std::invalid_argument("shuttled_crot_sim: b0 must be positive");
  }
  if (cfg.j0 < 0.0) {
    throw std::invalid_argument("shuttled_crot_sim: j0 must be >= 0");
  }
  if (!(cfg.g_shift > 0.0)) {
    throw std::invalid_argument("shuttled_crot_sim: g_shift must be positive");
  }
  check_trajectory_fits(l1, traj);
  check_trajectory_fits(l2, traj);
  const double mu = kMuBOverHbar;
  const double g0 = l1.params().g0;
  const double t_prov = kPi / cfg.rabi;
  double w1_ref, w2_ref;
  if (cfg.mode == DriveMode::PathMean) {
    w1_ref = landscape::path_mean(l1, traj, t_prov) * cfg.b0 * mu;
    w2_ref = (landscape::path_mean(l2, traj, t_prov) + cfg.g_shift) * cfg.b0 * mu;
  } else {
    w1_ref = g0 * cfg.b0 * mu;
    w2_ref = (g0 + cfg.g_shift) * cfg.b0 * mu;
  }
  const double delta_pair = w2_ref - w1_ref;
  const double chi = 0.5 * std::atan2(cfg.j0, delta_pair);
  const double rabi_eff = cfg.rabi * (std::cos(chi) + std::sin(chi));
  const double t_gate = kPi / rabi_eff;
  const double w_drive =
      0.5 * (w1_ref + w2_ref - cfg.j0 +
             std::sqrt(cfg.j0 * cfg.j0 + delta_pair * delta_pair));

  const Matrix2cd sx = qdyn::pauli_x();
  const Matrix2cd id = Matrix2cd::Identity();
  const Matrix4cd h_const = 0.25 * cfg.j0 * heisenberg_term() +
                            0.5 * cfg.rabi * (qdyn::kron2(sx, id) + qdyn::kron2(id, sx));
  long n = 2000;
  if (traj.kind != landscape::TrajectoryKind::Static) {
    n = std::max(n, std::lround(std::ceil(2.0 * traj.v * t_gate / l1.dx())));
  } else {
    n = 64;
  }
  if (opts.n_steps > 0) n = opts.n_steps;

  qdyn::HamiltonianTrace trace;
  trace.dim = 4;
  trace.duration = t_gate;
  trace.n_steps = static_cast<int>(n);
  trace.h4 = [&](double t) -> Matrix4cd {
    const double x = landscape::position(traj, t);
    const double d1 = l1.g_at(x) * cfg.b0 * mu - w_drive;
    const double d2 = (l2.g_at(x) + cfg.g_shift) * cfg.b0 * mu - w_drive;
    Matrix4cd h = h_const;
    h(0, 0) += 0.5 * (d1 + d2);
    h(1, 1) += 0.5 * (d1 - d2);
    h(2, 2) += 0.5 * (d2 - d1);
    h(3, 3) += -0.5 * (d1 + d2);
    return h;
  };
  const Matrix4cd u = qdyn::propagate(trace);

  Matrix4cd target = Matrix4cd::Identity();
  target(2, 2) = 0.0;
  target(3, 3) = 0.0;
  target(2, 3) = 1.0;
  target(3, 2) = 1.0;  // CNOT, control qubit 1 active on |1>
  const Matrix4cd a = u * target.adjoint();
  Eigen::Vector4cd diag;
  for (int k = 0; k < 4; ++k) diag(k) = a(k, k);
  const double fid = std::clamp(0.25 * max_over_virtual_z(diag), 0.0, 1.0);

  CrotResult out;
  out.u = u;
  out.infidelity = 1.0 - fid;
  out.drive_omega = w_drive;
  out.rabi_effective = rabi_eff;
  out.j0_ratio_warning = cfg.j0 > 0.2 * delta_pair;
  return out;
}

double sync_omega(double spacing, int p, SyncKind kind) {
  if (!(spacing > 0.0)) throw std::invalid_argument("sync_omega: spacing must be positive");
  if (p < 1) throw std::invalid_argument("sync_omega: p must be >= 1");
  switch (kind) {
    case SyncKind::TwoFrequency:
      return spacing / std::sqrt(4.0 * p * p - 1.0);
    case SyncKind::Bins:
      return spacing / p;
  }
  throw std::invalid_argument("sync_omega: unknown kind");
}

double sync_crosstalk_check(double spacing, int p, double omega_override) {
  const double omega = omega_override > 0.0
                           ? omega_override
                           : sync_omega(spacing, p, SyncKind::TwoFrequency);
  Matrix2cd h;
  h << 0.5 * spacing, 0.5 * omega, 0.5 * omega, -0.5 * spacing;
  const Matrix2cd u = qdyn::step_exp_2(h, kPi / omega);
  return 1.0 - qdyn::average_fidelity(u, Matrix2cd::Identity(), 1, true);
}

GTensorAxis gtensor_axis(const GTensor& g, double b1) {
  if (!(b1 > 0.0)) throw std::invalid_argument("gtensor_axis: b1 must be positive");
  const double inplane = g.g0 + g.alpha;
  if (inplane == 0.0) {
    throw std::invalid_argument("gtensor_axis: g0 + alpha must be nonzero");
  }
  GTensorAxis out;
  out.theta = std::atan2(g.beta, inplane);
  out.b1_eff = std::hypot(1.0 + g.alpha / g.g0, g.beta / g.g0) * b1;
  out.phase_correction = -out.theta;
  return out;
}

ParamEstimate estimate_parameters(double delta_g, double b0, double rabi,
                                  double lambda, double target,
                                  double quantile_factor) {
  if (!(delta_g > 0.0)) throw std::invalid_argument("estimate_parameters: delta_g must be positive");
  if (!(b0 > 0.0)) throw std::invalid_argument("estimate_parameters: b0 must be positive");
  if (!(rabi > 0.0)) throw std::invalid_argument("estimate_parameters: rabi must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("estimate_parameters: lambda must be positive");
  if (!(target > 0.0) || target >= 1.0) {
    throw std::invalid_argument("estimate_parameters: target must lie in (0, 1)");
  }
  if (!(quantile_factor > 0.0)) {
    throw std::invalid_argument("estimate_parameters: quantile_factor must be positive");
  }
  const double spread = delta_g * b0 * kMuBOverHbar;  // full dispersion, rad/s
  const double budget = 1.0 / target - 1.0;
  ParamEstimate out;
  out.d_min = lambda * std::pow(quantile_factor * spread / rabi, 2.0) * budget;
  out.v_min = rabi * out.d_min / kPi;
  out.v_min_cycles = out.v_min / kTwoPi;
  out.g_min_b0 = rabi * std::sqrt(budget);
  out.g_min = out.g_min_b0 / (b0 * kMuBOverHbar);
  out.sigma_at_d = spread * std::sqrt(lambda / out.d_min);
  out.i1 = qdyn::rabi_infidelity(quantile_factor * out.sigma_at_d, rabi);
  out.i2 = rabi * rabi / (out.g_min_b0 * out.g_min_b0 + rabi * rabi);
  return out;
}

}  // namespace spinmotion::protocols
