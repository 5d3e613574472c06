#pragma once

// Dense complex linear algebra for NV pseudospin ⊗ spin-1/2 nuclei.
//
// Basis ordering is NV ⊗ nucleus_1 ⊗ ... ⊗ nucleus_N. The NV pseudospin uses
// index 0 for |1⟩ and index 1 for |0⟩, so that
//   σ_z = |1⟩⟨1| − |0⟩⟨0| = diag(1, −1),  σ_x = |1⟩⟨0| + |0⟩⟨1|,
//   |±⟩ = (|1⟩ ± |0⟩)/√2
// coincide with the textbook Pauli matrices.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "nvpm/errors.hpp"

namespace nvpm {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Vec3 = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr Complex kI{0.0, 1.0};

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;

namespace pauli {

inline ComplexMatrix identity() { return ComplexMatrix::Identity(2, 2); }

inline ComplexMatrix x() {
  ComplexMatrix m(2, 2);
  m << 0.0, 1.0, 1.0, 0.0;
  return m;
}

inline ComplexMatrix y() {
  ComplexMatrix m(2, 2);
  m << 0.0, -kI, kI, 0.0;
  return m;
}

inline ComplexMatrix z() {
  ComplexMatrix m(2, 2);
  m << 1.0, 0.0, 0.0, -1.0;
  return m;
}

/// |1⟩⟨0| in the NV basis (raising operator of the pseudospin).
inline ComplexMatrix raise() {
  ComplexMatrix m = ComplexMatrix::Zero(2, 2);
  m(0, 1) = 1.0;
  return m;
}

}  // namespace pauli

/// |+⟩ = (|1⟩ + |0⟩)/√2
inline ComplexVector ket_plus() {
  ComplexVector v(2);
  v << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return v;
}

/// |−⟩ = (|1⟩ − |0⟩)/√2
inline ComplexVector ket_minus() {
  ComplexVector v(2);
  v << 1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0);
  return v;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

/// Places a single-site operator at `site` in a chain of `sites` two-level
/// systems; every other site carries the identity.
inline ComplexMatrix embed(const ComplexMatrix& op, std::size_t site, std::size_t sites) {
  if (op.rows() != 2 || op.cols() != 2) throw ContractError("embed: operator must be 2x2");
  if (site >= sites) throw ContractError("embed: site index out of range");
  const Eigen::Index left = Eigen::Index{1} << site;
  const Eigen::Index right = Eigen::Index{1} << (sites - site - 1);
  return kron(kron(ComplexMatrix::Identity(left, left), op), ComplexMatrix::Identity(right, right));
}

/// Largest entry of |M − M†| relative to max(1, max|M|).
inline double hermiticity_residual(const ComplexMatrix& m) {
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.adjoint()).cwiseAbs().maxCoeff() / scale;
}

inline double unitarity_residual(const ComplexMatrix& u) {
  return (u.adjoint() * u - ComplexMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const ComplexMatrix& m, double tol = kHermitianTol) {
  return m.rows() == m.cols() && hermiticity_residual(m) <= tol;
}

/// e^{−i h t} through the eigendecomposition of the Hermitian generator.
inline ComplexMatrix herm_exp(const ComplexMatrix& h, double t) {
  if (h.rows() != h.cols()) throw ContractError("herm_exp: matrix is not square");
  if (!is_hermitian(h)) throw ContractError("herm_exp: generator is not Hermitian");
  if (t == 0.0) return ComplexMatrix::Identity(h.rows(), h.cols());
  const Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw InvariantViolation("herm_exp: eigensolver failed");
  const Eigen::VectorXd& evals = solver.eigenvalues();
  ComplexVector phases(evals.size());
  for (Eigen::Index k = 0; k < evals.size(); ++k) phases(k) = std::polar(1.0, -evals(k) * t);
  const ComplexMatrix& v = solver.eigenvectors();
  return v * phases.asDiagonal() * v.adjoint();
}

/// Replaces `u` by the closest unitary (polar factor) and returns the max-norm
/// of the applied correction.
inline double project_unitary(ComplexMatrix& u) {
  const Eigen::JacobiSVD<ComplexMatrix> svd(u, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const ComplexMatrix polar = svd.matrixU() * svd.matrixV().adjoint();
  const double correction = (polar - u).cwiseAbs().maxCoeff();
  u = polar;
  return correction;
}

/// Unit-trace Hermitian positive semidefinite matrix; validated on construction.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix rho) : rho_(std::move(rho)) {
    if (rho_.rows() != rho_.cols()) throw ContractError("DensityMatrix: not square");
    if (!is_hermitian(rho_, 1e-10)) throw ContractError("DensityMatrix: not Hermitian");
    if (std::abs(rho_.trace() - Complex(1.0)) > kTraceTol)
      throw ContractError("DensityMatrix: trace differs from 1");
    const Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(rho_, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -1e-10)
      throw ContractError("DensityMatrix: negative eigenvalue");
  }

  static DensityMatrix pure(const ComplexVector& psi) {
    const ComplexVector n = psi / psi.norm();
    return DensityMatrix(n * n.adjoint());
  }

  static DensityMatrix maximally_mixed(Eigen::Index dim) {
    return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  const ComplexMatrix& matrix() const noexcept { return rho_; }
  Eigen::Index dim() const noexcept { return rho_.rows(); }

 private:
  ComplexMatrix rho_;
};

/// Tr(ρ·obs); the imaginary residue of a Hermitian observable is dropped.
inline double expect(const ComplexMatrix& rho, const ComplexMatrix& obs) {
  if (rho.rows() != obs.rows() || rho.cols() != obs.cols())
    throw ContractError("expect: dimension mismatch");
  // Tr(AB) = Σ_ij A_ij B_ji
  return (rho.array() * obs.transpose().array()).sum().real();
}

inline double expect(const DensityMatrix& rho, const ComplexMatrix& obs) {
  return expect(rho.matrix(), obs);
}

/// Spin-1/2 vector operator I = σ/2 as three 2×2 matrices.
inline std::array<ComplexMatrix, 3> spin_half_operators() {
  return {pauli::x() * 0.5, pauli::y() * 0.5, pauli::z() * 0.5};
}

inline ComplexMatrix dot(const std::array<ComplexMatrix, 3>& ops, const Vec3& v) {
  return ops[0] * v.x() + ops[1] * v.y() + ops[2] * v.z();
}

/// Max-norm difference between e^{i I·l φ}(I·b)e^{−i I·l φ} evaluated by matrix
/// conjugation and the closed-form rotated vector
///   [b − (b·l)l] cos φ − (l × b) sin φ + (b·l) l
/// contracted with I (spin-1/2).
inline double rotate_spin_identity_check(const Vec3& axis, double angle, const Vec3& b) {
  if (std::abs(axis.norm() - 1.0) > 1e-12)
    throw ContractError("rotate_spin_identity_check: axis is not a unit vector");
  const auto spin = spin_half_operators();
  const ComplexMatrix generator = dot(spin, axis);
  // herm_exp gives e^{-iHt}; t = −φ yields e^{+i I·l φ}.
  const ComplexMatrix rot = herm_exp(generator, -angle);
  const ComplexMatrix conjugated = rot * dot(spin, b) * rot.adjoint();

  const double bl = b.dot(axis);
  const Vec3 rotated = (b - bl * axis) * std::cos(angle) - axis.cross(b) * std::sin(angle) + bl * axis;
  return (conjugated - dot(spin, rotated)).cwiseAbs().maxCoeff();
}

}  // namespace nvpm
