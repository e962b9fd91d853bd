#pragma once

namespace spinmotion {

// Bohr magneton over hbar, rad s^-1 T^-1. All internal frequencies are
// angular; g * B * kMuBOverHbar is the Larmor angular frequency.
inline constexpr double kMuBOverHbar = 8.7940313e10;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// User-facing ordinary frequencies convert to angular on ingestion.
inline constexpr double mhz_to_rads(double f_mhz) { return kTwoPi * 1e6 * f_mhz; }
inline constexpr double ghz_to_rads(double f_ghz) { return kTwoPi * 1e9 * f_ghz; }
inline constexpr double rads_to_mhz(double w) { return w / (kTwoPi * 1e6); }

inline constexpr double um_to_m(double um) { return um * 1e-6; }
inline constexpr double nm_to_m(double nm) { return nm * 1e-9; }

inline constexpr const char* kToolVersion = SPINMOTION_VERSION;
inline constexpr const char* kGeneratorId = "xoshiro256pp-boxmuller-v1";

}  // namespace spinmotion
