#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccmqd/linalg.hpp"

namespace ccmqd {

/// Tolerance for accepting a matrix as a density matrix (hermiticity, trace,
/// smallest eigenvalue).
inline constexpr double kStateTol = 1e-9;

/// Largest roundoff correction sanitize() absorbs silently.
inline constexpr double kMaxDrift = 1e-8;

bool is_power_of_two(Index n);
int qubit_count(Index dim);

/// Unit-norm state vector on 2^n amplitudes.
class PureState {
 public:
  /// Validates the norm to 1e-12 and the dimension to a power of two.
  static PureState from_amplitudes(CVector amplitudes);
  /// Normalizes first; throws InvalidStateError on a zero vector.
  static PureState normalized(CVector amplitudes);

  static PureState basis_zero(int n_qubits);
  static PureState plus(int n_qubits);
  static PureState ghz(int n_qubits);

  Index dim() const noexcept { return amplitudes_.size(); }
  const CVector& amplitudes() const noexcept { return amplitudes_; }
  CMatrix projector() const { return amplitudes_ * amplitudes_.adjoint(); }

 private:
  explicit PureState(CVector amplitudes) : amplitudes_(std::move(amplitudes)) {}
  CVector amplitudes_;
};

/// Hermitian, positive semidefinite, unit-trace matrix on a 2^n dimensional
/// space. Instances are always valid; construction goes through a checked
/// factory.
class DensityMatrix {
 public:
  /// Validates the three invariants at `tol` and stores the Hermitian part.
  static DensityMatrix from_matrix(const CMatrix& m, double tol = kStateTol);
  static DensityMatrix from_pure(const PureState& psi);
  static DensityMatrix maximally_mixed(Index dim);

  /// Re-symmetrizes and trace-renormalizes `m`, then validates. Throws
  /// InvalidStateError when the correction exceeds `max_drift`. The applied
  /// correction is written to `drift` when given.
  static DensityMatrix sanitize(const CMatrix& m, double max_drift = kMaxDrift, double* drift = nullptr);

  Index dim() const noexcept { return mat_.rows(); }
  const CMatrix& matrix() const noexcept { return mat_; }

  /// Amplitudes when the state was built from a PureState.
  const std::optional<CVector>& pure_vector() const noexcept { return pure_; }

 private:
  DensityMatrix(CMatrix m, std::optional<CVector> pure) : mat_(std::move(m)), pure_(std::move(pure)) {}
  CMatrix mat_;
  std::optional<CVector> pure_;
};

/// Leading eigenvector when `rho` is rank one within kStateTol (purity test),
/// the stored amplitudes when it was built from a PureState, empty otherwise.
std::optional<CVector> rank_one_vector(const DensityMatrix& rho);

/// Uhlmann fidelity (Tr sqrt(sqrt(a) b sqrt(a)))^2, clipped to [0, 1]. Uses
/// <psi|b|psi> when either argument is rank one within 1e-9.
double fidelity(const DensityMatrix& a, const DensityMatrix& b);

/// Uhlmann fidelity by the double square root, no rank-one shortcut. Inputs are
/// raw PSD matrices; the result is not clipped.
double uhlmann_fidelity(const CMatrix& a, const CMatrix& b);

double purity(const DensityMatrix& rho);

/// -Tr(rho log2 rho); eigenvalues below 1e-12 contribute zero.
double von_neumann_entropy(const DensityMatrix& rho);

/// (Tr(rho X), Tr(rho Y), Tr(rho Z)) for a single qubit.
std::array<double, 3> bloch_vector(const DensityMatrix& rho);

/// Haar-random pure state on 1..7 qubits.
PureState random_pure_state(int n_qubits, Rng& rng);

enum class TargetKind { haar, zero, plus, ghz };

std::string to_string(TargetKind kind);
TargetKind target_kind_from_string(const std::string& name);

PureState make_target(TargetKind kind, int n_qubits, Rng& rng);

struct MeasurementOutcome {
  double probability = 0.0;
  /// Empty when probability < 1e-12.
  std::optional<DensityMatrix> post_state;
};

/// Born-rule update for a complete measurement set {M_mu}: probabilities
/// Tr[M rho M^dagger] and the normalized post-measurement states. Throws
/// InvalidStateError when sum M^dagger M deviates from I by more than 1e-9.
std::vector<MeasurementOutcome> measurement_update(const DensityMatrix& rho, std::span<const CMatrix> ops);

}  // namespace ccmqd
