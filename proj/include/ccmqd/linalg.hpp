#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstddef>

#include "ccmqd/errors.hpp"
#include "ccmqd/rng.hpp"

namespace ccmqd {

using Complex = std::complex<double>;
using Index = Eigen::Index;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending and
/// eigenvectors stored column-wise.
struct HermEig {
  RVector eigenvalues;
  CMatrix eigenvectors;

  CMatrix reconstruct() const {
    return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
  }

  /// V f(diag(lambda)) V^dagger for a scalar function f applied to each eigenvalue.
  template <typename Fn>
  CMatrix map(Fn&& fn) const {
    RVector mapped(eigenvalues.size());
    for (Index i = 0; i < eigenvalues.size(); ++i) mapped(i) = fn(eigenvalues(i));
    return eigenvectors * mapped.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
  }
};

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  return m.allFinite();
}

/// ||m - m^dagger||_F
template <typename Derived>
double hermiticity_defect(const Eigen::MatrixBase<Derived>& m) {
  return (m - m.adjoint()).norm();
}

/// (m + m^dagger) / 2
template <typename Derived>
CMatrix hermitian_part(const Eigen::MatrixBase<Derived>& m) {
  return (0.5 * (m + m.adjoint())).eval();
}

/// ||k^dagger k - I||_F, the orthonormality defect of a frame (columns).
template <typename Derived>
double isometry_defect(const Eigen::MatrixBase<Derived>& k) {
  const Index n = k.cols();
  return (k.adjoint() * k - CMatrix::Identity(n, n)).norm();
}

/// Standard Kronecker product a (x) b.
template <typename DerivedA, typename DerivedB>
CMatrix kron(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  const Index br = b.rows();
  const Index bc = b.cols();
  CMatrix out(a.rows() * br, a.cols() * bc);
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * br, j * bc, br, bc) = Complex(a(i, j)) * b.template cast<Complex>();
  return out;
}

/// Hermitian eigendecomposition. The input is symmetrized first.
/// Throws DimensionError on non-square input and NumericalError when the
/// solver does not converge or the input is not finite.
HermEig herm_eig(const CMatrix& a);

/// Eigenvalues only (ascending); cheaper than herm_eig.
RVector herm_eigenvalues(const CMatrix& a);

/// n eps max|lambda|: eigenvalues of a PSD matrix at or below this level are
/// indistinguishable from zero.
double roundoff_floor(const RVector& eigenvalues);

/// sum sqrt(lambda) over eigenvalues above roundoff_floor.
double trace_sqrt(const RVector& eigenvalues);

/// Principal square root of a positive semidefinite matrix. Eigenvalues in
/// [-clip_tol, 0) are clipped to zero, as are those below roundoff_floor;
/// anything lower than -clip_tol throws InvalidStateError.
CMatrix psd_sqrt(const CMatrix& a, double clip_tol = 1e-9);

/// Haar-distributed unitary: Ginibre sample, Householder QR, then the columns
/// of Q are rescaled by the phases of diag(R).
CMatrix haar_unitary(Index dim, Rng& rng);

/// Trace over the second tensor factor of an operator on C^sys (x) C^env.
CMatrix partial_trace_env(const CMatrix& m, Index sys_dim, Index env_dim);

/// Solves a x = b with partial-pivot LU. Throws SingularMatrixError when the
/// reciprocal condition estimate is below 1e-12 or the relative residual
/// exceeds 1e-9.
CMatrix solve_small(const CMatrix& a, const CMatrix& b);

/// Nearest isometry (polar factor U V^dagger of the thin SVD).
CMatrix polar_isometry(const CMatrix& a);

/// Frobenius norm of a - b relative to max(||b||_F, 1).
template <typename DerivedA, typename DerivedB>
double relative_distance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  return (a - b).norm() / std::max(b.norm(), 1.0);
}

}  // namespace ccmqd
