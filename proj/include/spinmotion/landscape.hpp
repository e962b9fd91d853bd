#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace spinmotion::landscape {

// Ornstein-Uhlenbeck g-factor field parameters. Lengths in meters.
struct OUParams {
  double g0 = 2.0;
  double delta_g = 2e-3;   // stationary std of g_int
  double lambda = 20e-9;   // correlation length
  double dx = 1e-9;        // sample grid step; must satisfy 0 < dx <= lambda/10
  double length = 0.0;     // must be >= 10 * lambda
  uint64_t seed = 0;
};

struct LandscapeOptions {
  double dot_sigma = 7e-9;  // wavefunction width for dot averaging
  bool periodic = false;    // loop landscapes wrap at the seam
};

// Sampled g_int(x) on a uniform grid over [0, length], plus the
// dot-averaged profile (Gaussian window, truncated at +-6 dot_sigma,
// renormalised). samples.size() == floor(length/dx) + 1; in periodic mode
// lookups wrap modulo round(length/dx) and the final seam sample is the
// duplicate of x = 0.
class GFactorLandscape {
 public:
  GFactorLandscape(OUParams params, std::vector<double> samples,
                   LandscapeOptions opts = {});

  const OUParams& params() const { return params_; }
  const std::vector<double>& samples() const { return samples_; }
  const std::vector<double>& dot_profile() const { return profile_; }
  double dx() const { return params_.dx; }
  double length() const { return params_.length; }
  double dot_sigma() const { return opts_.dot_sigma; }
  bool periodic() const { return opts_.periodic; }

  // Gaussian-weighted average of g_int around x_c, evaluated as the exact
  // discrete sum. Non-periodic landscapes require
  // x_c in [3 dot_sigma, length - 3 dot_sigma].
  double dot_average(double x_c) const;

  // Fast evaluation of the dot-averaged profile at arbitrary x via cubic
  // interpolation of the cached grid profile; equals dot_average to ~1e-9.
  double g_at(double x) const;

 private:
  void build_profile();
  double wrap(double x) const;

  OUParams params_;
  LandscapeOptions opts_;
  std::vector<double> samples_;
  std::vector<double> profile_;
  int period_ = 0;  // sample count per period in periodic mode
};

// Grid size for a landscape of the given length and spacing:
// floor(length / dx) + 1, with a one-ulp guard so lengths that are exact
// multiples of dx keep their final sample despite rounding in the quotient.
std::size_t sample_count(double length, double dx);

// Euler-Maruyama integration of
//   dg = (1/lambda) (g0 - g) dx + sqrt(2 dx / lambda) delta_g dW,
// stationary initial condition g(0) ~ N(g0, delta_g^2).
// In periodic mode the recursion is replaced by the matching AR(1) bridge
// conditioned on g(length) = g(0), so the wrapped field has no seam jump;
// length must then be an integer multiple of dx.
GFactorLandscape sample_ou(const OUParams& params, LandscapeOptions opts = {});

// CSV persistence, columns: x_meters,g_int (exact round-trip).
void dump_csv(const GFactorLandscape& l, const std::string& path);
GFactorLandscape load_csv(const std::string& path);

enum class TrajectoryKind { Static, Triangle, Loop };

// d: one-way distance (triangle) or circumference (loop), meters.
// phase: time offset, seconds. origin: spatial offset, meters.
struct ShuttleTrajectory {
  TrajectoryKind kind = TrajectoryKind::Static;
  double d = 0.0;
  double v = 0.0;
  double origin = 0.0;
  double phase = 0.0;
};

// Triangle wave: x = d/2 - v t for t < d/v, x = -3d/2 + v t for t < 2d/v,
// periodic with period 2d/v, plus origin. Loop: (origin + v t) mod d.
double position(const ShuttleTrajectory& traj, double t);

// Time average of the dot-averaged g along the trajectory over [0, T],
// midpoint rule with step min(dx/v, T/1000).
double path_mean(const GFactorLandscape& l, const ShuttleTrajectory& traj,
                 double t_total);

// Monte Carlo std of the homogenised g over landscape realisations for a
// one-way distance d (full triangle period; d = 0 degenerates to a single
// static dot). n_trials >= 100.
double homogenised_sigma(const OUParams& params, double d, int n_trials);

}  // namespace spinmotion::landscape
