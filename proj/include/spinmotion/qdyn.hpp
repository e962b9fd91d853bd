#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>

namespace spinmotion::qdyn {

using Eigen::Matrix2cd;
using Eigen::Matrix4cd;
using Eigen::MatrixXcd;
using complexd = std::complex<double>;

// dim x dim complex matrix, dim in {2, 4}; propagation results hold
// unitarity to 1e-10.
using ComplexUnitary = MatrixXcd;

// Piecewise-sampled Hamiltonian H(t) over [0, duration], angular units
// (rad/s). Exactly one of h2/h4 must be set, matching dim. evaluate(t)
// must be Hermitian to 1e-12 (relative to its own scale) at every sampled
// midpoint or propagation refuses to run.
struct HamiltonianTrace {
  int dim = 2;
  double duration = 0.0;
  int n_steps = 10000;
  std::function<Matrix2cd(double)> h2;
  std::function<Matrix4cd(double)> h4;

  MatrixXcd evaluate(double t) const;
};

// Time-ordered product of exact step propagators exp(-i H(t_k) dt) with
// midpoint sampling t_k = (k + 1/2) dt, dt = duration / n_steps.
ComplexUnitary propagate(const HamiltonianTrace& trace);

// Single exact step exp(-i H dt) for a 2x2 Hermitian H (axis-angle form).
Matrix2cd step_exp_2(const Matrix2cd& h, double dt);
// Same for 4x4 via self-adjoint eigendecomposition.
Matrix4cd step_exp_4(const Matrix4cd& h, double dt);

bool is_unitary(const MatrixXcd& u, double tol = 1e-10);
bool is_hermitian(const MatrixXcd& h, double tol = 1e-12);

// Removes pre/post virtual-Z freedom from a single-qubit gate:
// (|u00|, -i|u01|; -i|u10|, |u11|). Defined for dim 2 only.
Matrix2cd strip_z(const Matrix2cd& u);

// F = (1/4) |tr(target^dag u~)|^(2/n_q), u~ = strip_z(u) when strip is set.
// strip is only meaningful for dim 2. Result clamped to [0, 1].
double average_fidelity(const MatrixXcd& u, const MatrixXcd& target, int n_q,
                        bool strip);

// u = exp(i global_phase) Z_phi X_theta Z_lambda with P_a = exp(-i a P / 2),
// theta in [0, pi].
struct SU2Decomposition {
  double theta = 0.0;
  double phi = 0.0;
  double lambda = 0.0;
  double global_phase = 0.0;
};

SU2Decomposition su2_decompose(const Matrix2cd& u);
Matrix2cd su2_compose(const SU2Decomposition& d);

// Operator Schmidt coefficients of a two-qubit operator: singular values of
// the reshuffled matrix R[(i,k),(j,l)] = U[(i,j),(k,l)], descending.
// For U in U(4), sum of squares = tr(U^dag U) = 4.
Eigen::Vector4d schmidt_coefficients(const Matrix4cd& u);

// Closed-form infidelity of a resonant-time pi pulse driven omega with a
// static detuning: d^2 / (d^2 + omega^2).
double rabi_infidelity(double detuning, double omega);

// Small gate builders shared by protocols and tests.
Matrix2cd pauli_x();
Matrix2cd pauli_y();
Matrix2cd pauli_z();
Matrix2cd rot_x(double angle);
Matrix2cd rot_z(double angle);
Matrix4cd kron2(const Matrix2cd& a, const Matrix2cd& b);

}  // namespace spinmotion::qdyn
