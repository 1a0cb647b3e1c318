#include "ccmqd/state.hpp"

#include <algorithm>
#include <cmath>

namespace ccmqd {

bool is_power_of_two(Index n) { return n >= 1 && (n & (n - 1)) == 0; }

int qubit_count(Index dim) {
  if (!is_power_of_two(dim)) throw DimensionError("dimension " + std::to_string(dim) + " is not a power of two");
  int n = 0;
  while ((Index{1} << n) < dim) ++n;
  return n;
}

namespace {

Index dim_for_qubits(int n_qubits) {
  if (n_qubits < 1 || n_qubits > 7) throw DimensionError("qubit count must be in [1, 7]");
  return Index{1} << n_qubits;
}

}  // namespace

std::optional<CVector> rank_one_vector(const DensityMatrix& rho) {
  if (rho.pure_vector()) return rho.pure_vector();
  const double p = rho.matrix().cwiseAbs2().sum();  // Tr(rho^2) for Hermitian rho
  if (p < 1.0 - kStateTol) return std::nullopt;
  const HermEig eig = herm_eig(rho.matrix());
  return CVector(eig.eigenvectors.col(eig.eigenvectors.cols() - 1));
}

PureState PureState::from_amplitudes(CVector amplitudes) {
  if (!is_power_of_two(amplitudes.size())) throw DimensionError("pure state dimension must be a power of two");
  if (!amplitudes.allFinite()) throw InvalidStateError("pure state has non-finite amplitudes");
  if (std::abs(amplitudes.norm() - 1.0) > 1e-12) throw InvalidStateError("pure state amplitudes are not unit norm");
  return PureState(std::move(amplitudes));
}

PureState PureState::normalized(CVector amplitudes) {
  const double norm = amplitudes.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidStateError("cannot normalize a zero or non-finite vector");
  amplitudes /= norm;
  return from_amplitudes(std::move(amplitudes));
}

PureState PureState::basis_zero(int n_qubits) {
  CVector v = CVector::Zero(dim_for_qubits(n_qubits));
  v(0) = 1.0;
  return PureState(std::move(v));
}

PureState PureState::plus(int n_qubits) {
  const Index dim = dim_for_qubits(n_qubits);
  return PureState(CVector::Constant(dim, Complex(1.0 / std::sqrt(double(dim)))));
}

PureState PureState::ghz(int n_qubits) {
  const Index dim = dim_for_qubits(n_qubits);
  CVector v = CVector::Zero(dim);
  v(0) = v(dim - 1) = 1.0 / std::sqrt(2.0);
  return PureState(std::move(v));
}

DensityMatrix DensityMatrix::from_matrix(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) throw DimensionError("density matrix must be square");
  if (!is_power_of_two(m.rows())) throw DimensionError("density matrix dimension must be a power of two");
  if (!m.allFinite()) throw InvalidStateError("density matrix has non-finite entries");
  const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (herm > tol) throw InvalidStateError("density matrix is not Hermitian (defect " + std::to_string(herm) + ")");
  CMatrix h = hermitian_part(m);
  const double trace_err = std::abs(h.trace().real() - 1.0);
  if (trace_err > tol) throw InvalidStateError("density matrix trace deviates from 1 by " + std::to_string(trace_err));
  const double lowest = herm_eigenvalues(h)(0);
  if (lowest < -tol) throw InvalidStateError("density matrix has eigenvalue " + std::to_string(lowest));
  return DensityMatrix(std::move(h), std::nullopt);
}

DensityMatrix DensityMatrix::from_pure(const PureState& psi) { return DensityMatrix(psi.projector(), psi.amplitudes()); }

DensityMatrix DensityMatrix::maximally_mixed(Index dim) {
  if (!is_power_of_two(dim)) throw DimensionError("dimension must be a power of two");
  return DensityMatrix(CMatrix::Identity(dim, dim) / double(dim), std::nullopt);
}

DensityMatrix DensityMatrix::sanitize(const CMatrix& m, double max_drift, double* drift) {
  if (m.rows() != m.cols()) throw DimensionError("density matrix must be square");
  if (!m.allFinite()) throw InvalidStateError("density matrix has non-finite entries");
  const double herm = (m - m.adjoint()).cwiseAbs().maxCoeff();
  CMatrix h = hermitian_part(m);
  const double tr = h.trace().real();
  const double correction = std::max(herm, std::abs(tr - 1.0));
  if (drift) *drift = correction;
  if (correction > max_drift)
    throw InvalidStateError("state drift " + std::to_string(correction) + " exceeds " + std::to_string(max_drift));
  h /= tr;
  return from_matrix(h);
}

double uhlmann_fidelity(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("fidelity: dimension mismatch");
  const CMatrix sa = psd_sqrt(a);
  const double f = trace_sqrt(herm_eigenvalues(sa * b * sa));
  return f * f;
}

double fidelity(const DensityMatrix& a, const DensityMatrix& b) {
  if (a.dim() != b.dim()) throw DimensionError("fidelity: dimension mismatch");
  double f = 0.0;
  if (auto psi = rank_one_vector(a)) {
    f = psi->dot(b.matrix() * *psi).real();
  } else if (auto phi = rank_one_vector(b)) {
    f = phi->dot(a.matrix() * *phi).real();
  } else {
    f = uhlmann_fidelity(a.matrix(), b.matrix());
  }
  return std::clamp(f, 0.0, 1.0);
}

double purity(const DensityMatrix& rho) { return rho.matrix().cwiseAbs2().sum(); }

double von_neumann_entropy(const DensityMatrix& rho) {
  const RVector lambda = herm_eigenvalues(rho.matrix());
  double s = 0.0;
  for (Index i = 0; i < lambda.size(); ++i)
    if (lambda(i) > 1e-12) s -= lambda(i) * std::log2(lambda(i));
  return std::max(s, 0.0);
}

std::array<double, 3> bloch_vector(const DensityMatrix& rho) {
  if (rho.dim() != 2) throw DimensionError("bloch_vector: single-qubit state required");
  const CMatrix& m = rho.matrix();
  return {2.0 * m(0, 1).real(), -2.0 * m(0, 1).imag(), (m(0, 0) - m(1, 1)).real()};
}

PureState random_pure_state(int n_qubits, Rng& rng) {
  const Index dim = dim_for_qubits(n_qubits);
  CVector v(dim);
  for (Index i = 0; i < dim; ++i) v(i) = rng.complex_normal();
  return PureState::normalized(std::move(v));
}

std::string to_string(TargetKind kind) {
  switch (kind) {
    case TargetKind::haar: return "haar";
    case TargetKind::zero: return "zero";
    case TargetKind::plus: return "plus";
    case TargetKind::ghz: return "ghz";
  }
  return "haar";
}

TargetKind target_kind_from_string(const std::string& name) {
  if (name == "haar") return TargetKind::haar;
  if (name == "zero") return TargetKind::zero;
  if (name == "plus") return TargetKind::plus;
  if (name == "ghz") return TargetKind::ghz;
  throw ConfigError("unknown target kind '" + name + "'");
}

PureState make_target(TargetKind kind, int n_qubits, Rng& rng) {
  switch (kind) {
    case TargetKind::zero: return PureState::basis_zero(n_qubits);
    case TargetKind::plus: return PureState::plus(n_qubits);
    case TargetKind::ghz: return PureState::ghz(n_qubits);
    case TargetKind::haar: break;
  }
  return random_pure_state(n_qubits, rng);
}

std::vector<MeasurementOutcome> measurement_update(const DensityMatrix& rho, std::span<const CMatrix> ops) {
  const Index d = rho.dim();
  CMatrix completeness = CMatrix::Zero(d, d);
  for (const CMatrix& m : ops) {
    if (m.rows() != d || m.cols() != d) throw DimensionError("measurement_update: operator dimension mismatch");
    completeness += m.adjoint() * m;
  }
  const double defect = (completeness - CMatrix::Identity(d, d)).norm();
  if (ops.empty() || defect > 1e-9)
    throw InvalidStateError("measurement_update: incomplete operator set (defect " + std::to_string(defect) + ")");

  std::vector<MeasurementOutcome> outcomes;
  outcomes.reserve(ops.size());
  for (const CMatrix& m : ops) {
    const CMatrix branch = m * rho.matrix() * m.adjoint();
    MeasurementOutcome out;
    out.probability = std::max(branch.trace().real(), 0.0);
    if (out.probability >= 1e-12) {
      CMatrix post = hermitian_part(branch) / out.probability;
      out.post_state = DensityMatrix::from_matrix(post);
    }
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

}  // namespace ccmqd
