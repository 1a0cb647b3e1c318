#include "ccmqd/linalg.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ccmqd {

namespace {

void require_square(const CMatrix& a, const char* what) {
  if (a.rows() != a.cols())
    throw DimensionError(std::string(what) + ": expected a square matrix, got " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

}  // namespace

HermEig herm_eig(const CMatrix& a) {
  require_square(a, "herm_eig");
  if (!a.allFinite()) throw NumericalError("herm_eig: non-finite input");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(a));
  if (solver.info() != Eigen::Success) throw NumericalError("herm_eig: eigensolver did not converge");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

RVector herm_eigenvalues(const CMatrix& a) {
  require_square(a, "herm_eigenvalues");
  if (!a.allFinite()) throw NumericalError("herm_eigenvalues: non-finite input");
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian_part(a), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("herm_eigenvalues: eigensolver did not converge");
  return solver.eigenvalues();
}

double roundoff_floor(const RVector& eigenvalues) {
  if (eigenvalues.size() == 0) return 0.0;
  return double(eigenvalues.size()) * std::numeric_limits<double>::epsilon() * eigenvalues.cwiseAbs().maxCoeff();
}

double trace_sqrt(const RVector& eigenvalues) {
  const double floor = roundoff_floor(eigenvalues);
  double s = 0.0;
  for (Index i = 0; i < eigenvalues.size(); ++i)
    if (eigenvalues(i) > floor) s += std::sqrt(eigenvalues(i));
  return s;
}

CMatrix psd_sqrt(const CMatrix& a, double clip_tol) {
  const HermEig eig = herm_eig(a);
  const double lowest = eig.eigenvalues.size() > 0 ? eig.eigenvalues(0) : 0.0;
  if (lowest < -clip_tol)
    throw InvalidStateError("psd_sqrt: eigenvalue " + std::to_string(lowest) + " below -" +
                            std::to_string(clip_tol));
  const double floor = roundoff_floor(eig.eigenvalues);
  return eig.map([floor](double lambda) { return lambda > floor ? std::sqrt(lambda) : 0.0; });
}

CMatrix haar_unitary(Index dim, Rng& rng) {
  if (dim < 1) throw DimensionError("haar_unitary: dim must be >= 1");
  CMatrix ginibre(dim, dim);
  for (Index j = 0; j < dim; ++j)
    for (Index i = 0; i < dim; ++i) ginibre(i, j) = rng.complex_normal();

  Eigen::HouseholderQR<CMatrix> qr(ginibre);
  CMatrix q = qr.householderQ() * CMatrix::Identity(dim, dim);
  const CMatrix& r = qr.matrixQR();
  for (Index j = 0; j < dim; ++j) {
    const Complex diag = r(j, j);
    const double mag = std::abs(diag);
    // A zero pivot has probability zero under the Ginibre measure.
    q.col(j) *= mag > 0.0 ? diag / mag : Complex(1.0);
  }
  return q;
}

CMatrix partial_trace_env(const CMatrix& m, Index sys_dim, Index env_dim) {
  const Index total = sys_dim * env_dim;
  if (m.rows() != total || m.cols() != total)
    throw DimensionError("partial_trace_env: expected " + std::to_string(total) + "x" +
                         std::to_string(total) + " input");
  CMatrix out = CMatrix::Zero(sys_dim, sys_dim);
  for (Index s = 0; s < sys_dim; ++s)
    for (Index t = 0; t < sys_dim; ++t) {
      Complex acc = 0.0;
      for (Index e = 0; e < env_dim; ++e) acc += m(s * env_dim + e, t * env_dim + e);
      out(s, t) = acc;
    }
  return out;
}

CMatrix solve_small(const CMatrix& a, const CMatrix& b) {
  require_square(a, "solve_small");
  if (a.rows() != b.rows()) throw DimensionError("solve_small: right-hand side row count mismatch");
  if (!a.allFinite() || !b.allFinite()) throw SingularMatrixError("solve_small: non-finite input");

  Eigen::PartialPivLU<CMatrix> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond >= 1e-12))
    throw SingularMatrixError("solve_small: ill-conditioned system (rcond " + std::to_string(rcond) + ")");
  CMatrix x = lu.solve(b);
  const double scale = std::max(b.norm(), 1e-300);
  const double residual = (a * x - b).norm() / scale;
  if (!(residual < 1e-9) && b.norm() > 0.0)
    throw SingularMatrixError("solve_small: residual " + std::to_string(residual) + " too large");
  return x;
}

CMatrix polar_isometry(const CMatrix& a) {
  Eigen::JacobiSVD<CMatrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

}  // namespace ccmqd
