// Python bindings for the simulation core. The module mirrors the C++ API:
// config structs are mutable, result structs are read-only, matrices cross
// the boundary as numpy arrays, and Monte Carlo sweeps accept a Python
// callable as the per-trial simulator (run serially; the seeding scheme
// makes the schedule irrelevant to the results).

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "spinmotion/architectures.hpp"
#include "spinmotion/cli.hpp"
#include "spinmotion/constants.hpp"
#include "spinmotion/errors.hpp"
#include "spinmotion/landscape.hpp"
#include "spinmotion/montecarlo.hpp"
#include "spinmotion/protocols.hpp"
#include "spinmotion/qdyn.hpp"
#include "spinmotion/rng.hpp"

namespace py = pybind11;
using namespace spinmotion;

PYBIND11_MODULE(_spinmotion, m) {
  m.doc() =
      "Spin-qubit gate simulations over stochastic g-factor landscapes: "
      "exchange/tunnel two-qubit gates, shuttled single- and two-qubit "
      "gates, device-level architecture studies, and seeded Monte Carlo "
      "sweeps.";

  m.attr("TOOL_VERSION") = kToolVersion;
  m.attr("GENERATOR_ID") = kGeneratorId;
  m.attr("MU_B_OVER_HBAR") = kMuBOverHbar;

  m.def("mhz_to_rads", &mhz_to_rads, py::arg("mhz"),
        "Convert an ordinary frequency in MHz to angular rad/s.");
  m.def("rads_to_mhz", &rads_to_mhz, py::arg("rads"),
        "Convert angular rad/s to ordinary MHz.");
  m.def("derive_seed", &derive_seed, py::arg("base"), py::arg("salt"),
        "Deterministically derive an independent sub-seed.");

  py::register_exception<ModelError>(m, "ModelError");
  py::register_exception<NumericalError>(m, "NumericalError");
  py::register_exception<PlanningError>(m, "PlanningError");
  py::register_exception<cli::ConfigError>(m, "ConfigError");

  // --- qdyn ---------------------------------------------------------------
  m.def("schmidt_coefficients", &qdyn::schmidt_coefficients, py::arg("u"),
        "Operator Schmidt coefficients of a 4x4 two-qubit operator, "
        "descending; sum of squares is 4 for a unitary.");
  m.def("average_fidelity", &qdyn::average_fidelity, py::arg("u"),
        py::arg("target"), py::arg("n_qubits"), py::arg("strip"),
        "Average gate fidelity |tr(T^dag U)|^(2/n) / 4, optionally after "
        "stripping virtual-Z freedom (single-qubit only).");
  m.def("strip_z", &qdyn::strip_z, py::arg("u"),
        "Remove pre/post virtual-Z freedom from a single-qubit gate.");
  m.def("is_unitary", &qdyn::is_unitary, py::arg("u"),
        py::arg("tol") = 1e-10);
  m.def("rabi_infidelity", &qdyn::rabi_infidelity, py::arg("detuning"),
        py::arg("omega"),
        "Closed-form pi-pulse infidelity under a static detuning.");

  // --- landscape ----------------------------------------------------------
  py::class_<landscape::OUParams>(m, "OUParams",
                                  "Ornstein-Uhlenbeck g-factor field "
                                  "parameters (lengths in meters).")
      .def(py::init<>())
      .def_readwrite("g0", &landscape::OUParams::g0)
      .def_readwrite("delta_g", &landscape::OUParams::delta_g)
      .def_readwrite("lambda_", &landscape::OUParams::lambda)
      .def_readwrite("dx", &landscape::OUParams::dx)
      .def_readwrite("length", &landscape::OUParams::length)
      .def_readwrite("seed", &landscape::OUParams::seed);

  py::class_<landscape::LandscapeOptions>(m, "LandscapeOptions")
      .def(py::init<>())
      .def_readwrite("dot_sigma", &landscape::LandscapeOptions::dot_sigma)
      .def_readwrite("periodic", &landscape::LandscapeOptions::periodic);

  py::class_<landscape::GFactorLandscape>(
      m, "GFactorLandscape",
      "A sampled g-factor field plus its dot-averaged profile.")
      .def_property_readonly("samples",
                             [](const landscape::GFactorLandscape& l) {
                               return l.samples();
                             })
      .def_property_readonly("dot_profile",
                             [](const landscape::GFactorLandscape& l) {
                               return l.dot_profile();
                             })
      .def_property_readonly("length", &landscape::GFactorLandscape::length)
      .def_property_readonly("dx", &landscape::GFactorLandscape::dx)
      .def_property_readonly("periodic",
                             &landscape::GFactorLandscape::periodic)
      .def("dot_average", &landscape::GFactorLandscape::dot_average,
           py::arg("x_c"))
      .def("g_at", &landscape::GFactorLandscape::g_at, py::arg("x"));

  m.def("sample_ou", &landscape::sample_ou, py::arg("params"),
        py::arg("options") = landscape::LandscapeOptions{},
        "Draw one g-factor landscape (seeded, reproducible).");
  m.def("landscape_dump_csv", &landscape::dump_csv, py::arg("landscape"),
        py::arg("path"));
  m.def("landscape_load_csv", &landscape::load_csv, py::arg("path"));
  m.def("homogenised_sigma", &landscape::homogenised_sigma,
        py::arg("params"), py::arg("d"), py::arg("n_trials"),
        "Monte Carlo std of the trajectory-averaged g over realisations.");

  py::enum_<landscape::TrajectoryKind>(m, "TrajectoryKind")
      .value("Static", landscape::TrajectoryKind::Static)
      .value("Triangle", landscape::TrajectoryKind::Triangle)
      .value("Loop", landscape::TrajectoryKind::Loop);

  py::class_<landscape::ShuttleTrajectory>(m, "ShuttleTrajectory")
      .def(py::init<>())
      .def_readwrite("kind", &landscape::ShuttleTrajectory::kind)
      .def_readwrite("d", &landscape::ShuttleTrajectory::d)
      .def_readwrite("v", &landscape::ShuttleTrajectory::v)
      .def_readwrite("origin", &landscape::ShuttleTrajectory::origin)
      .def_readwrite("phase", &landscape::ShuttleTrajectory::phase);

  m.def("position", &landscape::position, py::arg("trajectory"),
        py::arg("t"));
  m.def("path_mean", &landscape::path_mean, py::arg("landscape"),
        py::arg("trajectory"), py::arg("t_total"));

  // --- protocols ----------------------------------------------------------
  py::class_<protocols::SimOptions>(m, "SimOptions")
      .def(py::init<>())
      .def_readwrite("n_steps", &protocols::SimOptions::n_steps)
      .def_readwrite("lab_frame", &protocols::SimOptions::lab_frame)
      .def_readwrite("scale_drive_by_local_g",
                     &protocols::SimOptions::scale_drive_by_local_g)
      .def_readwrite("carrier", &protocols::SimOptions::carrier);

  py::class_<protocols::DriveTone>(m, "DriveTone")
      .def(py::init<>())
      .def_readwrite("omega", &protocols::DriveTone::omega)
      .def_readwrite("rabi", &protocols::DriveTone::rabi)
      .def_readwrite("phase", &protocols::DriveTone::phase);

  py::class_<protocols::ExchangeConfig>(m, "ExchangeConfig")
      .def(py::init<>())
      .def_readwrite("omega12", &protocols::ExchangeConfig::omega12)
      .def_readwrite("j", &protocols::ExchangeConfig::j)
      .def_readwrite("rabi", &protocols::ExchangeConfig::rabi)
      .def_readwrite("p", &protocols::ExchangeConfig::p)
      .def_readwrite("enforce_sync", &protocols::ExchangeConfig::enforce_sync);

  py::class_<protocols::TwoQubitResult>(m, "TwoQubitResult")
      .def_readonly("u", &protocols::TwoQubitResult::u)
      .def_readonly("infidelity", &protocols::TwoQubitResult::infidelity);

  m.def("exchange_gate_sim", &protocols::exchange_gate_sim, py::arg("config"),
        py::arg("options") = protocols::SimOptions{},
        "Simultaneous X on an exchange-coupled pair; J = 2 p Omega "
        "synchronisation enforced by default.");

  py::class_<protocols::TimeTrace>(m, "TimeTrace")
      .def_readonly("t", &protocols::TimeTrace::t)
      .def_readonly("sz1", &protocols::TimeTrace::sz1)
      .def_readonly("sz2", &protocols::TimeTrace::sz2);

  m.def("exchange_time_trace", &protocols::exchange_time_trace,
        py::arg("config"), py::arg("sample_period"),
        "<sigma_z> traces over one gate; sample_period = 2 pi / J gives the "
        "stroboscopic trace.");

  py::class_<protocols::TunnelConfig>(m, "TunnelConfig")
      .def(py::init<>())
      .def_readwrite("omega12", &protocols::TunnelConfig::omega12)
      .def_readwrite("t_c", &protocols::TunnelConfig::t_c)
      .def_readwrite("rabi", &protocols::TunnelConfig::rabi)
      .def_readwrite("epsilon", &protocols::TunnelConfig::epsilon)
      .def_readwrite("p", &protocols::TunnelConfig::p)
      .def_readwrite("enforce_sync", &protocols::TunnelConfig::enforce_sync);

  py::class_<protocols::TunnelResult>(m, "TunnelResult")
      .def_readonly("u", &protocols::TunnelResult::u)
      .def_readonly("spin_block", &protocols::TunnelResult::spin_block)
      .def_readonly("infidelity", &protocols::TunnelResult::infidelity)
      .def_readonly("postselected_infidelity",
                    &protocols::TunnelResult::postselected_infidelity)
      .def_readonly("charge_return", &protocols::TunnelResult::charge_return)
      .def_readonly("charge_return_ok",
                    &protocols::TunnelResult::charge_return_ok);

  m.def("tunnel_gate_sim", &protocols::tunnel_gate_sim, py::arg("config"),
        py::arg("options") = protocols::SimOptions{},
        "X gate on a double dot with charge tunneling; t_c = 2 p Omega "
        "synchronisation enforced by default.");

  py::enum_<protocols::DriveMode>(m, "DriveMode")
      .value("PathMean", protocols::DriveMode::PathMean,
             "Drive at the qubit's own trajectory-averaged frequency.")
      .value("DeviceMean", protocols::DriveMode::DeviceMean,
             "Drive at the landscape-agnostic device-average frequency.");

  py::class_<protocols::ShuttledXResult>(m, "ShuttledXResult")
      .def_readonly("u", &protocols::ShuttledXResult::u)
      .def_readonly("infidelity", &protocols::ShuttledXResult::infidelity)
      .def_readonly("drive_omega", &protocols::ShuttledXResult::drive_omega);

  m.def("shuttled_x_gate_sim", &protocols::shuttled_x_gate_sim,
        py::arg("landscape"), py::arg("trajectory"), py::arg("tone"),
        py::arg("b0"), py::arg("mode"),
        py::arg("options") = protocols::SimOptions{},
        "Single-tone X gate while shuttling over a g-factor landscape.");

  py::class_<protocols::CrotConfig>(m, "CrotConfig")
      .def(py::init<>())
      .def_readwrite("g_shift", &protocols::CrotConfig::g_shift)
      .def_readwrite("j0", &protocols::CrotConfig::j0)
      .def_readwrite("rabi", &protocols::CrotConfig::rabi)
      .def_readwrite("b0", &protocols::CrotConfig::b0)
      .def_readwrite("mode", &protocols::CrotConfig::mode);

  py::class_<protocols::CrotResult>(m, "CrotResult")
      .def_readonly("u", &protocols::CrotResult::u)
      .def_readonly("infidelity", &protocols::CrotResult::infidelity)
      .def_readonly("drive_omega", &protocols::CrotResult::drive_omega)
      .def_readonly("rabi_effective", &protocols::CrotResult::rabi_effective)
      .def_readonly("j0_ratio_warning",
                    &protocols::CrotResult::j0_ratio_warning);

  m.def("shuttled_crot_sim", &protocols::shuttled_crot_sim,
        py::arg("landscape1"), py::arg("landscape2"), py::arg("config"),
        py::arg("trajectory"), py::arg("options") = protocols::SimOptions{},
        "Shuttled two-qubit CROT (CNOT up to virtual Z) on two independent "
        "landscapes.");

  py::enum_<protocols::SyncKind>(m, "SyncKind")
      .value("TwoFrequency", protocols::SyncKind::TwoFrequency)
      .value("Bins", protocols::SyncKind::Bins);

  m.def("sync_omega", &protocols::sync_omega, py::arg("spacing"),
        py::arg("p"), py::arg("kind"),
        "Rabi rate that makes a spectator detuned by `spacing` complete "
        "full rotations during the pi pulse.");
  m.def("sync_crosstalk_check", &protocols::sync_crosstalk_check,
        py::arg("spacing"), py::arg("p"), py::arg("omega_override") = 0.0,
        "Identity infidelity of a spectator during one synchronised pulse.");
  m.def("tunability_gain", &protocols::tunability_gain, py::arg("delta_g"),
        py::arg("stark_fraction"));

  py::class_<protocols::GTensor>(m, "GTensor")
      .def(py::init<>())
      .def_readwrite("g0", &protocols::GTensor::g0)
      .def_readwrite("alpha", &protocols::GTensor::alpha)
      .def_readwrite("beta", &protocols::GTensor::beta)
      .def_readwrite("g13", &protocols::GTensor::g13)
      .def_readwrite("g23", &protocols::GTensor::g23)
      .def_readwrite("g33", &protocols::GTensor::g33);

  py::class_<protocols::GTensorAxis>(m, "GTensorAxis")
      .def_readonly("theta", &protocols::GTensorAxis::theta)
      .def_readonly("b1_eff", &protocols::GTensorAxis::b1_eff)
      .def_readonly("phase_correction",
                    &protocols::GTensorAxis::phase_correction);

  m.def("gtensor_axis", &protocols::gtensor_axis, py::arg("g"), py::arg("b1"),
        "Effective drive axis tilt, amplitude, and phase correction of an "
        "anisotropic g-tensor.");

  py::class_<protocols::ParamEstimate>(m, "ParamEstimate")
      .def_readonly("d_min", &protocols::ParamEstimate::d_min)
      .def_readonly("v_min", &protocols::ParamEstimate::v_min)
      .def_readonly("v_min_cycles", &protocols::ParamEstimate::v_min_cycles)
      .def_readonly("g_min", &protocols::ParamEstimate::g_min)
      .def_readonly("g_min_b0", &protocols::ParamEstimate::g_min_b0)
      .def_readonly("sigma_at_d", &protocols::ParamEstimate::sigma_at_d)
      .def_readonly("i1", &protocols::ParamEstimate::i1)
      .def_readonly("i2", &protocols::ParamEstimate::i2);

  m.def("estimate_parameters", &protocols::estimate_parameters,
        py::arg("delta_g"), py::arg("b0"), py::arg("rabi"), py::arg("lambda_"),
        py::arg("target"), py::arg("quantile_factor") = 2.0,
        "Closed-form minimum shuttle distance, velocity (both frequency "
        "conventions), and target shift for an infidelity target.");

  // --- architectures --------------------------------------------------------
  py::enum_<architectures::ArchKind>(m, "ArchKind")
      .value("TwoByN", architectures::ArchKind::TwoByN)
      .value("LoopedPipeline", architectures::ArchKind::LoopedPipeline);

  py::enum_<architectures::ShuttleVariant>(m, "ShuttleVariant")
      .value("SigmaPositive", architectures::ShuttleVariant::SigmaPositive)
      .value("SigmaZero", architectures::ShuttleVariant::SigmaZero);

  py::class_<architectures::ArchitectureConfig>(m, "ArchitectureConfig")
      .def(py::init<>())
      .def_readwrite("kind", &architectures::ArchitectureConfig::kind)
      .def_readwrite("n_t", &architectures::ArchitectureConfig::n_t)
      .def_readwrite("n_n", &architectures::ArchitectureConfig::n_n)
      .def_readwrite("b0", &architectures::ArchitectureConfig::b0)
      .def_readwrite("delta_g", &architectures::ArchitectureConfig::delta_g)
      .def_readwrite("g_shift", &architectures::ArchitectureConfig::g_shift)
      .def_readwrite("d", &architectures::ArchitectureConfig::d)
      .def_readwrite("v", &architectures::ArchitectureConfig::v)
      .def_readwrite("rabi_nominal",
                     &architectures::ArchitectureConfig::rabi_nominal)
      .def_readwrite("qubits_per_loop",
                     &architectures::ArchitectureConfig::qubits_per_loop)
      .def_readwrite("loops", &architectures::ArchitectureConfig::loops)
      .def_readwrite("g0", &architectures::ArchitectureConfig::g0)
      .def_readwrite("lambda_", &architectures::ArchitectureConfig::lambda)
      .def_readwrite("dx", &architectures::ArchitectureConfig::dx)
      .def_readwrite("dot_sigma",
                     &architectures::ArchitectureConfig::dot_sigma);

  py::class_<architectures::Scenario>(m, "Scenario",
                                      "A built device instance: per-qubit "
                                      "landscapes, trajectories, and shifts.")
      .def_property_readonly("n_qubits",
                             [](const architectures::Scenario& s) {
                               return s.qubits.size();
                             })
      .def("to_json", &architectures::scenario_to_json);

  py::class_<architectures::ShuttlePlan>(m, "ShuttlePlan")
      .def_readonly("compensation", &architectures::ShuttlePlan::compensation)
      .def_readonly("sync_p", &architectures::ShuttlePlan::sync_p)
      .def_readonly("variant", &architectures::ShuttlePlan::variant)
      .def("to_json", &architectures::shuttle_plan_to_json);

  py::class_<architectures::BinningPlan>(m, "BinningPlan")
      .def_readonly("delta_omega_q", &architectures::BinningPlan::delta_omega_q)
      .def_readonly("omega_ref", &architectures::BinningPlan::omega_ref)
      .def_readonly("assigned_bin", &architectures::BinningPlan::assigned_bin)
      .def_readonly("stark_shift", &architectures::BinningPlan::stark_shift)
      .def_readonly("tone_centers", &architectures::BinningPlan::tone_centers)
      .def("to_json", &architectures::binning_plan_to_json);

  py::class_<architectures::ScenarioResult>(m, "ScenarioResult")
      .def_readonly("qubit_infidelity",
                    &architectures::ScenarioResult::qubit_infidelity)
      .def_readonly("device_fidelity",
                    &architectures::ScenarioResult::device_fidelity)
      .def_readonly("device_infidelity",
                    &architectures::ScenarioResult::device_infidelity)
      .def_readonly("mean_target_infidelity",
                    &architectures::ScenarioResult::mean_target_infidelity)
      .def_readonly("mean_nontarget_infidelity",
                    &architectures::ScenarioResult::mean_nontarget_infidelity);

  m.def("build_2xn_scenario", &architectures::build_2xn_scenario,
        py::arg("config"), py::arg("seed"),
        "Two-rail device: n_t shifted targets over n_t - 2 non-targets.");
  m.def("build_loop_scenario", &architectures::build_loop_scenario,
        py::arg("config"), py::arg("seed"),
        "Looped pipeline: qubits share one periodic landscape per loop.");
  m.def("plan_shuttle_drive", &architectures::plan_shuttle_drive,
        py::arg("scenario"), py::arg("variant"),
        "One global tone; SigmaZero additionally pins every channel.");
  m.def("plan_binning_drive", &architectures::plan_binning_drive,
        py::arg("scenario"), py::arg("p"),
        "Static Stark-shift binning plan; raises PlanningError when a "
        "target and a non-target collide in one bin.");
  m.def("simulate_scenario",
        py::overload_cast<const architectures::Scenario&,
                          const architectures::ShuttlePlan&,
                          const protocols::SimOptions&>(
            &architectures::simulate_scenario),
        py::arg("scenario"), py::arg("plan"),
        py::arg("options") = protocols::SimOptions{});
  m.def("simulate_scenario",
        py::overload_cast<const architectures::Scenario&,
                          const architectures::BinningPlan&,
                          const protocols::SimOptions&>(
            &architectures::simulate_scenario),
        py::arg("scenario"), py::arg("plan"),
        py::arg("options") = protocols::SimOptions{});

  // --- montecarlo -----------------------------------------------------------
  py::class_<montecarlo::SweepAxis>(m, "SweepAxis")
      .def(py::init<>())
      .def(py::init([](std::string name, std::vector<double> values) {
             return montecarlo::SweepAxis{std::move(name), std::move(values)};
           }),
           py::arg("name"), py::arg("values"))
      .def_readwrite("name", &montecarlo::SweepAxis::name)
      .def_readwrite("values", &montecarlo::SweepAxis::values);

  py::class_<montecarlo::SweepSpec>(m, "SweepSpec")
      .def(py::init<>())
      .def_readwrite("axes", &montecarlo::SweepSpec::axes)
      .def_readwrite("trials_per_point",
                     &montecarlo::SweepSpec::trials_per_point)
      .def_readwrite("base_seed", &montecarlo::SweepSpec::base_seed)
      .def_readwrite("simulator_id", &montecarlo::SweepSpec::simulator_id)
      .def_readwrite("workers", &montecarlo::SweepSpec::workers);

  py::class_<montecarlo::SampleStats>(m, "SampleStats")
      .def_readonly("mean", &montecarlo::SampleStats::mean)
      .def_readonly("std", &montecarlo::SampleStats::std)
      .def_readonly("p50", &montecarlo::SampleStats::p50)
      .def_readonly("p95", &montecarlo::SampleStats::p95);

  py::class_<montecarlo::PointResult>(m, "PointResult")
      .def_readonly("params", &montecarlo::PointResult::params)
      .def_readonly("n", &montecarlo::PointResult::n)
      .def_readonly("stats", &montecarlo::PointResult::stats)
      .def_readonly("failures", &montecarlo::PointResult::failures)
      .def_readonly("all_failed", &montecarlo::PointResult::all_failed);

  py::class_<montecarlo::SweepResult>(m, "SweepResult")
      .def_readonly("axis_names", &montecarlo::SweepResult::axis_names)
      .def_readonly("points", &montecarlo::SweepResult::points)
      .def_readonly("trials_per_point",
                    &montecarlo::SweepResult::trials_per_point)
      .def_readonly("base_seed", &montecarlo::SweepResult::base_seed)
      .def_readonly("simulator_id", &montecarlo::SweepResult::simulator_id)
      .def_readonly("generator_id", &montecarlo::SweepResult::generator_id)
      .def_readonly("tool_version", &montecarlo::SweepResult::tool_version)
      .def("to_json", [](const montecarlo::SweepResult& r) {
        return montecarlo::result_to_json(r);
      });

  m.def("summarize", &montecarlo::summarize, py::arg("samples"),
        "Mean, unbiased std, and nearest-rank p50/p95 of a sample.");
  m.def(
      "run_sweep",
      [](montecarlo::SweepSpec spec, const montecarlo::Simulator& simulator) {
        // Python simulators hold the GIL, so the schedule is pinned to one
        // worker; per-trial seeding makes the results identical to any
        // worker count.
        spec.workers = 1;
        return montecarlo::run_sweep(spec, simulator);
      },
      py::arg("spec"), py::arg("simulator"),
      "Run simulator(params, seed) -> float over the grid; trial seeds are "
      "base_seed + (point_index << 32) + trial, wrapping at 64 bits.");
  m.def("write_sweep_csv",
        py::overload_cast<const montecarlo::SweepResult&, const std::string&>(
            &montecarlo::write_csv),
        py::arg("result"), py::arg("path"),
        "Versioned CSV with exact grid echo (byte-stable across runs).");

  // --- cli ------------------------------------------------------------------
  m.def("config_canonical", [](const std::string& text) {
        return cli::config_to_json(cli::parse_config(text));
      },
      py::arg("text"),
      "Validate a JSON run config and return its canonical form (defaults "
      "filled, keys sorted). Raises ConfigError on any violation.");
  m.def(
      "run_command",
      [](const std::string& text) {
        const auto cfg = cli::parse_config(text);
        std::ostringstream err;
        const auto outcome = cli::run(cfg, err);
        if (outcome.exit_code != 0) throw std::runtime_error(err.str());
        return outcome.files;
      },
      py::arg("text"),
      "Execute a run config (same engine as the command-line tool) and "
      "return the artifact paths it wrote.");
}
