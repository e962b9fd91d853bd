#pragma once

// Shared test helpers. rk4_propagate is an independent reference integrator
// (classic fixed-step RK4 on dU/dt = -i H(t) U) that shares no code with the
// production propagator; it is the oracle the propagator is checked against.

#include <Eigen/Dense>
#include <complex>

#include "spinmotion/rng.hpp"

namespace testsupport {

template <typename HFunc>
Eigen::MatrixXcd rk4_propagate(int dim, const HFunc& h, double duration, long n) {
  using Mat = Eigen::MatrixXcd;
  const std::complex<double> mi(0.0, -1.0);
  Mat u = Mat::Identity(dim, dim);
  const double dt = duration / static_cast<double>(n);
  for (long k = 0; k < n; ++k) {
    const double t = k * dt;
    const Mat k1 = mi * (h(t) * u);
    const Mat k2 = mi * (h(t + 0.5 * dt) * (u + (0.5 * dt) * k1));
    const Mat k3 = mi * (h(t + 0.5 * dt) * (u + (0.5 * dt) * k2));
    const Mat k4 = mi * (h(t + dt) * (u + dt * k3));
    u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return u;
}

inline Eigen::MatrixXcd random_hermitian(int dim, spinmotion::Rng& rng) {
  Eigen::MatrixXcd a(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      a(i, j) = std::complex<double>(rng.next_normal(), rng.next_normal());
    }
  }
  return 0.5 * (a + a.adjoint());
}

// Haar-like random unitary: QR of a complex Gaussian matrix with the phase
// convention fixed from the diagonal of R.
inline Eigen::MatrixXcd random_unitary(int dim, spinmotion::Rng& rng) {
  Eigen::MatrixXcd a(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      a(i, j) = std::complex<double>(rng.next_normal(), rng.next_normal());
    }
  }
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  Eigen::MatrixXcd q = qr.householderQ();
  Eigen::MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i) {
    const std::complex<double> d = r(i, i);
    const double ad = std::abs(d);
    if (ad > 0.0) q.col(i) *= d / ad;
  }
  return q;
}

inline double max_abs_diff(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace testsupport
