#include "spinmotion/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spinmotion/rng.hpp"

namespace spinmotion::landscape {

namespace {

void validate(const OUParams& p) {
  if (!(p.lambda > 0.0)) throw std::invalid_argument("OUParams: lambda must be positive");
  if (!(p.dx > 0.0) || p.dx > p.lambda / 10.0) {
    throw std::invalid_argument("OUParams: dx must satisfy 0 < dx <= lambda/10");
  }
  if (p.length < 10.0 * p.lambda) {
    throw std::invalid_argument("OUParams: length must be >= 10 * lambda");
  }
  if (p.delta_g < 0.0) throw std::invalid_argument("OUParams: delta_g must be >= 0");
}

}  // namespace

GFactorLandscape::GFactorLandscape(OUParams params, std::vector<double> samples,
                                   LandscapeOptions opts)
    : params_(params), opts_(opts), samples_(std::move(samples)) {
  validate(params_);
  const size_t expected = sample_count(params_.length, params_.dx);
  if (samples_.size() != expected) {
    throw std::invalid_argument("GFactorLandscape: sample count does not match length/dx");
  }
  if (!(opts_.dot_sigma > 0.0)) {
    throw std::invalid_argument("GFactorLandscape: dot_sigma must be positive");
  }
  period_ = static_cast<int>(std::llround(params_.length / params_.dx));
  if (opts_.periodic &&
      std::abs(period_ * params_.dx - params_.length) > 1e-9 * params_.length) {
    throw std::invalid_argument(
        "GFactorLandscape: periodic landscapes need length to be a multiple of dx");
  }
  build_profile();
}

void GFactorLandscape::build_profile() {
  const int n = static_cast<int>(samples_.size());
  const int k_max = static_cast<int>(std::ceil(6.0 * opts_.dot_sigma / params_.dx));
  std::vector<double> w(2 * k_max + 1);
  const double inv2s2 = 1.0 / (2.0 * opts_.dot_sigma * opts_.dot_sigma);
  for (int k = -k_max; k <= k_max; ++k) {
    const double r = k * params_.dx;
    w[k + k_max] = std::exp(-r * r * inv2s2);
  }
  profile_.resize(n);
  for (int j = 0; j < n; ++j) {
    double num = 0.0, den = 0.0;
    if (opts_.periodic) {
      for (int k = -k_max; k <= k_max; ++k) {
        int idx = (j + k) % period_;
        if (idx < 0) idx += period_;
        num += w[k + k_max] * samples_[idx];
        den += w[k + k_max];
      }
    } else {
      const int lo = std::max(-k_max, -j);
      const int hi = std::min(k_max, n - 1 - j);
      for (int k = lo; k <= hi; ++k) {
        num += w[k + k_max] * samples_[j + k];
        den += w[k + k_max];
      }
    }
    profile_[j] = num / den;
  }
}

double GFactorLandscape::wrap(double x) const {
  const double L = params_.length;
  double r = std::fmod(x, L);
  if (r < 0.0) r += L;
  return r;
}

double GFactorLandscape::dot_average(double x_c) const {
  const double s = opts_.dot_sigma;
  const int n = static_cast<int>(samples_.size());
  if (opts_.periodic) {
    x_c = wrap(x_c);
  } else if (x_c < 3.0 * s || x_c > params_.length - 3.0 * s) {
    throw std::out_of_range("dot_average: x_c too close to the landscape edge");
  }
  const double inv2s2 = 1.0 / (2.0 * s * s);
  // Window centred on the nearest grid index so the truncation is symmetric
  // in samples; an asymmetric cutoff would bias sloped profiles through the
  // unbalanced edge weight.
  const int j0 = static_cast<int>(std::llround(x_c / params_.dx));
  const int k_max = static_cast<int>(std::ceil(6.0 * s / params_.dx));
  const int lo = j0 - k_max;
  const int hi = j0 + k_max;
  double num = 0.0, den = 0.0;
  for (int j = lo; j <= hi; ++j) {
    int idx = j;
    if (opts_.periodic) {
      idx = j % period_;
      if (idx < 0) idx += period_;
    } else if (j < 0 || j >= n) {
      continue;  // window truncated at the edge, renormalised below
    }
    const double r = j * params_.dx - x_c;
    const double wk = std::exp(-r * r * inv2s2);
    num += wk * samples_[idx];
    den += wk;
  }
  return num / den;
}

double GFactorLandscape::g_at(double x) const {
  const int n = static_cast<int>(samples_.size());
  double u;
  if (opts_.periodic) {
    u = wrap(x) / params_.dx;
  } else {
    u = std::clamp(x, 0.0, params_.length) / params_.dx;
  }
  int j = static_cast<int>(std::floor(u));
  const double f = u - j;
  auto at = [&](int i) {
    if (opts_.periodic) {
      i %= period_;
      if (i < 0) i += period_;
    } else {
      i = std::clamp(i, 0, n - 1);
    }
    return profile_[i];
  };
  const double p0 = at(j - 1), p1 = at(j), p2 = at(j + 1), p3 = at(j + 2);
  const double a = -0.5 * p0 + 1.5 * p1 - 1.5 * p2 + 0.5 * p3;
  const double b = p0 - 2.5 * p1 + 2.0 * p2 - 0.5 * p3;
  const double c = 0.5 * (p2 - p0);
  return ((a * f + b) * f + c) * f + p1;
}

std::size_t sample_count(double length, double dx) {
  return static_cast<std::size_t>(std::floor(length / dx * (1.0 + 1e-12))) + 1;
}

GFactorLandscape sample_ou(const OUParams& params, LandscapeOptions opts) {
  validate(params);
  const size_t n = sample_count(params.length, params.dx);
  std::vector<double> g(n);
  Rng rng(params.seed);
  const double step = params.dx / params.lambda;
  const double noise = std::sqrt(2.0 * step) * params.delta_g;
  if (!opts.periodic) {
    g[0] = params.g0 + params.delta_g * rng.next_normal();
    for (size_t i = 1; i < n; ++i) {
      g[i] = g[i - 1] + step * (params.g0 - g[i - 1]) + noise * rng.next_normal();
    }
    return GFactorLandscape(params, std::move(g), opts);
  }
  // Periodic case: AR(1) bridge with coefficient a = 1 - dx/lambda and the
  // Euler-Maruyama innovation variance, conditioned on g[N] = g[0].
  const long N = std::llround(params.length / params.dx);
  if (std::abs(N * params.dx - params.length) > 1e-9 * params.length) {
    throw std::invalid_argument("sample_ou: periodic length must be a multiple of dx");
  }
  const double a = 1.0 - step;
  if (!(a > 0.0)) throw std::invalid_argument("sample_ou: dx too coarse for periodic bridge");
  const double var_stat = noise * noise / (1.0 - a * a);
  const double log_a = std::log(a);
  const double a_n = std::exp(N * log_a);
  const double seam_sd = std::sqrt(var_stat * (1.0 + a_n) / (1.0 - a_n));
  g[0] = params.g0 + seam_sd * rng.next_normal();
  for (long i = 1; i < N; ++i) {
    const double r2 = std::exp((N - i) * log_a);  // a^(N-i), decay to the seam
    const double denom = 1.0 - a * a * r2 * r2;
    const double mean =
        params.g0 + (a * (1.0 - r2 * r2) * (g[i - 1] - params.g0) +
                     r2 * (1.0 - a * a) * (g[0] - params.g0)) /
                        denom;
    const double sd = std::sqrt(var_stat * (1.0 - a * a) * (1.0 - r2 * r2) / denom);
    g[i] = mean + sd * rng.next_normal();
  }
  g[N] = g[0];
  return GFactorLandscape(params, std::move(g), opts);
}

void dump_csv(const GFactorLandscape& l, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_csv: cannot open " + path);
  out << "x_meters,g_int\n";
  char buf[64];
  for (size_t i = 0; i < l.samples().size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", i * l.dx(), l.samples()[i]);
    out << buf;
  }
}

GFactorLandscape load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "x_meters,g_int") {
    throw std::runtime_error("load_csv: bad header in " + path);
  }
  std::vector<double> xs, gs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("load_csv: bad row");
    xs.push_back(std::stod(line.substr(0, comma)));
    gs.push_back(std::stod(line.substr(comma + 1)));
  }
  if (xs.size() < 2) throw std::runtime_error("load_csv: too few rows");
  const double dx = xs[1] - xs[0];
  for (size_t i = 1; i < xs.size(); ++i) {
    if (std::abs(xs[i] - i * dx) > 1e-9 * std::max(1.0, std::abs(xs[i]))) {
      throw std::runtime_error("load_csv: grid is not uniform");
    }
  }
  OUParams p;
  p.dx = dx;
  p.length = dx * (xs.size() - 1);
  return GFactorLandscape(p, std::move(gs));
}

double position(const ShuttleTrajectory& traj, double t) {
  const double tt = t + traj.phase;
  switch (traj.kind) {
    case TrajectoryKind::Static:
      return traj.origin;
    case TrajectoryKind::Triangle: {
      if (!(traj.d > 0.0) || !(traj.v > 0.0)) {
        throw std::invalid_argument("position: triangle needs d > 0 and v > 0");
      }
      const double period = 2.0 * traj.d / traj.v;
      double tau = std::fmod(tt, period);
      if (tau < 0.0) tau += period;
      const double x = (tau < traj.d / traj.v) ? traj.d / 2.0 - traj.v * tau
                                               : -1.5 * traj.d + traj.v * tau;
      return traj.origin + x;
    }
    case TrajectoryKind::Loop: {
      if (!(traj.d > 0.0) || !(traj.v > 0.0)) {
        throw std::invalid_argument("position: loop needs d > 0 and v > 0");
      }
      double x = std::fmod(traj.origin + traj.v * tt, traj.d);
      if (x < 0.0) x += traj.d;
      return x;
    }
  }
  throw std::invalid_argument("position: unknown trajectory kind");
}

double path_mean(const GFactorLandscape& l, const ShuttleTrajectory& traj,
                 double t_total) {
  if (!(t_total > 0.0)) throw std::invalid_argument("path_mean: T must be positive");
  double h = t_total / 1000.0;
  if (traj.kind != TrajectoryKind::Static && traj.v > 0.0) {
    h = std::min(h, l.dx() / traj.v);
  }
  const long n = static_cast<long>(std::ceil(t_total / h));
  const double step = t_total / static_cast<double>(n);
  double acc = 0.0;
  for (long k = 0; k < n; ++k) {
    acc += l.g_at(position(traj, (k + 0.5) * step));
  }
  return acc / static_cast<double>(n);
}

double homogenised_sigma(const OUParams& params, double d, int n_trials) {
  if (n_trials < 100) {
    throw std::invalid_argument("homogenised_sigma: n_trials must be >= 100");
  }
  if (d < 0.0) throw std::invalid_argument("homogenised_sigma: d must be >= 0");
  LandscapeOptions opts;
  OUParams p = params;
  p.length = std::max(d + 12.0 * opts.dot_sigma, 10.0 * p.lambda);
  std::vector<double> values(n_trials);
  for (int i = 0; i < n_trials; ++i) {
    p.seed = derive_seed(params.seed, static_cast<uint64_t>(i));
    const GFactorLandscape l = sample_ou(p, opts);
    if (d < p.dx) {
      values[i] = l.dot_average(p.length / 2.0);
    } else {
      ShuttleTrajectory traj;
      traj.kind = TrajectoryKind::Triangle;
      traj.d = d;
      traj.v = 1.0;
      traj.origin = p.length / 2.0;
      values[i] = path_mean(l, traj, 2.0 * d / traj.v);
    }
  }
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n_trials;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / (n_trials - 1));
}

}  // namespace spinmotion::landscape
