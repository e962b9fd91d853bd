#include "spinmotion/qdyn.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spinmotion/errors.hpp"

namespace spinmotion::qdyn {

namespace {

constexpr complexd kI{0.0, 1.0};

double max_abs(const MatrixXcd& m) {
  return m.cwiseAbs().maxCoeff();
}

void check_hermitian_sample(const MatrixXcd& h, double t) {
  const double scale = std::max(1.0, max_abs(h));
  if (max_abs(h - h.adjoint()) > 1e-12 * scale) {
    throw ModelError("Hamiltonian sample is not Hermitian at t = " +
                     std::to_string(t));
  }
}

}  // namespace

MatrixXcd HamiltonianTrace::evaluate(double t) const {
  if (dim == 2 && h2) return h2(t);
  if (dim == 4 && h4) return h4(t);
  throw std::invalid_argument("HamiltonianTrace: no callback matching dim");
}

Matrix2cd step_exp_2(const Matrix2cd& h, double dt) {
  // h = c0 I + a . sigma with real a; exp(-i h dt) in closed form.
  const double c0 = 0.5 * (h(0, 0).real() + h(1, 1).real());
  const double az = 0.5 * (h(0, 0).real() - h(1, 1).real());
  const double ax = h(0, 1).real();
  const double ay = -h(0, 1).imag();
  const double r = std::sqrt(ax * ax + ay * ay + az * az);
  const double theta = r * dt;
  double sinc;  // sin(r dt) / r, stable as r -> 0
  double c;
  if (theta < 1e-6) {
    sinc = dt * (1.0 - theta * theta / 6.0);
    c = 1.0 - theta * theta / 2.0;
  } else {
    sinc = std::sin(theta) / r;
    c = std::cos(theta);
  }
  const complexd phase = std::exp(-kI * c0 * dt);
  Matrix2cd u;
  u(0, 0) = phase * (c - kI * az * sinc);
  u(0, 1) = phase * (-kI * sinc * complexd(ax, -ay));
  u(1, 0) = phase * (-kI * sinc * complexd(ax, ay));
  u(1, 1) = phase * (c + kI * az * sinc);
  return u;
}

Matrix4cd step_exp_4(const Matrix4cd& h, double dt) {
  Eigen::SelfAdjointEigenSolver<Matrix4cd> es(h);
  Eigen::Vector4cd phases;
  for (int i = 0; i < 4; ++i) {
    phases(i) = std::exp(-kI * es.eigenvalues()(i) * dt);
  }
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

ComplexUnitary propagate(const HamiltonianTrace& trace) {
  if (trace.dim != 2 && trace.dim != 4) {
    throw std::invalid_argument("propagate: dim must be 2 or 4");
  }
  if (!(trace.duration > 0.0)) {
    throw std::invalid_argument("propagate: duration must be positive");
  }
  if (trace.n_steps < 1) {
    throw std::invalid_argument("propagate: n_steps must be >= 1");
  }
  const double dt = trace.duration / trace.n_steps;

  // Each factor is exactly unitary, but rounding in the products drifts by
  // ~1e-16 per step; a Newton polar-projection sweep every 2^15 steps keeps
  // million-step runs unitary to full precision.
  constexpr int kRenormEvery = 32768;
  MatrixXcd u;
  if (trace.dim == 2) {
    if (!trace.h2) throw std::invalid_argument("propagate: h2 not set");
    Matrix2cd acc = Matrix2cd::Identity();
    for (int k = 0; k < trace.n_steps; ++k) {
      const double t = (k + 0.5) * dt;
      const Matrix2cd h = trace.h2(t);
      check_hermitian_sample(h, t);
      acc = (step_exp_2(h, dt) * acc).eval();
      if ((k + 1) % kRenormEvery == 0) {
        acc = (1.5 * acc - 0.5 * acc * acc.adjoint() * acc).eval();
      }
    }
    u = acc;
  } else {
    if (!trace.h4) throw std::invalid_argument("propagate: h4 not set");
    Matrix4cd acc = Matrix4cd::Identity();
    for (int k = 0; k < trace.n_steps; ++k) {
      const double t = (k + 0.5) * dt;
      const Matrix4cd h = trace.h4(t);
      check_hermitian_sample(h, t);
      acc = (step_exp_4(h, dt) * acc).eval();
      if ((k + 1) % kRenormEvery == 0) {
        acc = (1.5 * acc - 0.5 * acc * acc.adjoint() * acc).eval();
      }
    }
    u = acc;
  }

  if (!is_unitary(u, 1e-10)) {
    throw NumericalError("propagate: result lost unitarity beyond 1e-10");
  }
  return u;
}

bool is_unitary(const MatrixXcd& u, double tol) {
  if (u.rows() != u.cols()) return false;
  const MatrixXcd d = u.adjoint() * u - MatrixXcd::Identity(u.rows(), u.cols());
  return max_abs(d) <= tol;
}

bool is_hermitian(const MatrixXcd& h, double tol) {
  if (h.rows() != h.cols()) return false;
  return max_abs(MatrixXcd(h - h.adjoint())) <= tol;
}

Matrix2cd strip_z(const Matrix2cd& u) {
  Matrix2cd s;
  s(0, 0) = std::abs(u(0, 0));
  s(0, 1) = -kI * std::abs(u(0, 1));
  s(1, 0) = -kI * std::abs(u(1, 0));
  s(1, 1) = std::abs(u(1, 1));
  return s;
}

double average_fidelity(const MatrixXcd& u, const MatrixXcd& target, int n_q,
                        bool strip) {
  if (n_q != 1 && n_q != 2) {
    throw std::invalid_argument("average_fidelity: n_q must be 1 or 2");
  }
  const int dim = 1 << n_q;
  if (u.rows() != dim || u.cols() != dim || target.rows() != dim ||
      target.cols() != dim) {
    throw std::invalid_argument("average_fidelity: dimension mismatch");
  }
  if (strip && dim != 2) {
    throw std::invalid_argument("average_fidelity: strip requires dim 2");
  }
  MatrixXcd ut = u;
  if (strip) ut = strip_z(Matrix2cd(u));
  const double tr = std::abs((target.adjoint() * ut).trace());
  const double f = 0.25 * std::pow(tr, 2.0 / n_q);
  return std::clamp(f, 0.0, 1.0);
}

SU2Decomposition su2_decompose(const Matrix2cd& u) {
  if (!is_unitary(u, 1e-10)) {
    throw std::invalid_argument("su2_decompose: input is not unitary");
  }
  SU2Decomposition d;
  // Pull out the overall phase via the determinant, leaving an SU(2) matrix
  // v with v(0,0) = cos(theta/2) e^{-i(phi+lambda)/2} and
  // v(0,1) = -i sin(theta/2) e^{-i(phi-lambda)/2}.
  d.global_phase = 0.5 * std::arg(u.determinant());
  const Matrix2cd v = std::exp(-kI * d.global_phase) * u;
  const double c = std::abs(v(0, 0));
  const double s = std::abs(v(0, 1));
  d.theta = 2.0 * std::atan2(s, c);
  if (s <= 1e-15) {
    // Diagonal: fold the remaining relative phase into phi.
    d.lambda = 0.0;
    d.phi = -2.0 * std::arg(v(0, 0));
    return d;
  }
  if (c <= 1e-15) {
    // Antidiagonal: only phi - lambda is defined; gauge lambda = 0.
    d.lambda = 0.0;
    d.phi = -2.0 * std::arg(kI * v(0, 1));
    return d;
  }
  const double sum = -2.0 * std::arg(v(0, 0));      // phi + lambda
  const double diff = -2.0 * std::arg(kI * v(0, 1));  // phi - lambda
  d.phi = 0.5 * (sum + diff);
  d.lambda = 0.5 * (sum - diff);
  return d;
}

Matrix2cd su2_compose(const SU2Decomposition& d) {
  return std::exp(kI * d.global_phase) * rot_z(d.phi) * rot_x(d.theta) *
         rot_z(d.lambda);
}

Eigen::Vector4d schmidt_coefficients(const Matrix4cd& u) {
  // Reshuffle (i tensor j),(k tensor l) -> (i,k),(j,l).
  Matrix4cd r;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l)
          r(2 * i + k, 2 * j + l) = u(2 * i + j, 2 * k + l);
  Eigen::JacobiSVD<Matrix4cd> svd(r);
  return svd.singularValues();
}

double rabi_infidelity(double detuning, double omega) {
  if (!(omega > 0.0)) {
    throw std::invalid_argument("rabi_infidelity: omega must be positive");
  }
  const double d2 = detuning * detuning;
  return d2 / (d2 + omega * omega);
}

Matrix2cd pauli_x() {
  Matrix2cd m;
  m << 0, 1, 1, 0;
  return m;
}

Matrix2cd pauli_y() {
  Matrix2cd m;
  m << complexd(0, 0), complexd(0, -1), complexd(0, 1), complexd(0, 0);
  return m;
}

Matrix2cd pauli_z() {
  Matrix2cd m;
  m << 1, 0, 0, -1;
  return m;
}

Matrix2cd rot_x(double angle) {
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  Matrix2cd m;
  m << complexd(c, 0), complexd(0, -s), complexd(0, -s), complexd(c, 0);
  return m;
}

Matrix2cd rot_z(double angle) {
  Matrix2cd m = Matrix2cd::Zero();
  m(0, 0) = std::exp(-kI * (0.5 * angle));
  m(1, 1) = std::exp(kI * (0.5 * angle));
  return m;
}

Matrix4cd kron2(const Matrix2cd& a, const Matrix2cd& b) {
  Matrix4cd m;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      m.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
  return m;
}

}  // namespace spinmotion::qdyn
