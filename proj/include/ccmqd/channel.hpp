#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ccmqd/linalg.hpp"
#include "ccmqd/state.hpp"

namespace ccmqd {

/// Tolerance for accepting a Kraus set as complete.
inline constexpr double kCompletenessTol = 1e-9;

struct CptpReport {
  double defect = 0.0;  ///< ||sum k^dagger k - I||_F
  bool pass = false;
};

/// Completeness check. Malformed input (empty set, non-square or mismatched
/// operators) is reported as a failure with an infinite defect.
CptpReport verify_cptp(std::span<const CMatrix> ops, double tol);

/// Operator-sum channel rho -> sum_i k_i rho k_i^dagger with sum k^dagger k = I.
class KrausChannel {
 public:
  /// Throws InvalidStateError when the completeness defect exceeds `tol`.
  explicit KrausChannel(std::vector<CMatrix> ops, double tol = kCompletenessTol);

  /// Slices a (dim*K) x dim isometry into K stacked dim x dim blocks.
  static KrausChannel from_isometry(const CMatrix& kappa, Index dim, double tol = kCompletenessTol);

  static KrausChannel identity(Index dim);

  Index dim() const noexcept { return dim_; }
  Index size() const noexcept { return Index(ops_.size()); }
  const std::vector<CMatrix>& ops() const noexcept { return ops_; }

  /// The ops stacked vertically, a point on the Stiefel manifold.
  CMatrix stacked() const;

  CMatrix apply(const CMatrix& rho) const;

 private:
  Index dim_ = 0;
  std::vector<CMatrix> ops_;
};

/// Operator-sum application on a raw matrix, no completeness requirement.
CMatrix apply_kraus(std::span<const CMatrix> ops, const CMatrix& rho);

/// Output is re-symmetrized and trace-renormalized (drift bounded by kMaxDrift).
DensityMatrix apply(const KrausChannel& ch, const DensityMatrix& rho);

/// Kraus set of `second o first`, i.e. first applied, then second.
KrausChannel compose(const KrausChannel& second, const KrausChannel& first);

/// Equivalent Kraus set of at most dim^2 operators, from the eigenvectors of
/// the Choi matrix. Sets already that small are returned unchanged.
KrausChannel minimal_kraus(const KrausChannel& ch);

/// Global depolarizing map rho -> (1 - p) rho + p I/d, applied in closed form.
class DepolarizingMap {
 public:
  DepolarizingMap(Index dim, double p);

  Index dim() const noexcept { return dim_; }
  double strength() const noexcept { return p_; }

  CMatrix apply(const CMatrix& rho) const;

  /// d^2 generalized-Pauli Kraus operators sqrt(w_ab) X^a Z^b realizing the same map.
  KrausChannel to_kraus() const;

 private:
  Index dim_;
  double p_;
};

/// One forward diffusion step: a Kraus channel (optionally repeated), or a
/// depolarizing map kept in affine form.
class Channel {
 public:
  Channel(KrausChannel kraus, int repeats = 1);
  Channel(DepolarizingMap map);

  Index dim() const;
  int repeats() const noexcept { return repeats_; }
  const KrausChannel* kraus() const noexcept { return std::get_if<KrausChannel>(&impl_); }
  const DepolarizingMap* depolarizing() const noexcept { return std::get_if<DepolarizingMap>(&impl_); }

  CMatrix apply(const CMatrix& rho) const;
  DensityMatrix apply(const DensityMatrix& rho) const;

  /// Single Kraus set for the whole step (repeats composed out).
  KrausChannel to_kraus() const;

 private:
  std::variant<KrausChannel, DepolarizingMap> impl_;
  int repeats_ = 1;
};

/// Haar-random channel: the first `dim` columns of a Haar unitary on dim*K,
/// sliced into K blocks.
KrausChannel haar_random_channel(Index dim, Index kraus_count, Rng& rng);

struct LindbladSpec {
  CMatrix hamiltonian;
  std::vector<CMatrix> jump_ops;
  double dt = 0.0;
};

struct LindbladStep {
  KrausChannel channel;
  double raw_defect = 0.0;        ///< completeness defect of the first-order operators
  double projected_defect = 0.0;  ///< after nearest-isometry projection
};

/// First-order operators k0 = I - i H_eff dt with H_eff = H - (i/2) sum G^dagger G,
/// and k_j = G_j sqrt(dt). No projection.
std::vector<CMatrix> lindblad_raw_ops(const LindbladSpec& spec);

/// One-step channel for the Lindblad generator, projected to exact
/// completeness by polar decomposition. Throws InvalidStateError when the raw
/// defect reaches 0.01 (dt too large).
LindbladStep lindblad_step_channel(const LindbladSpec& spec);

/// Unitary on system (x) environment (system first, environment dimension K)
/// whose |e0> column block is the channel's stacked isometry; the remaining
/// columns are completed by Gram-Schmidt over the standard basis in order.
CMatrix stinespring_unitary(const KrausChannel& ch);

/// Tr_E[U (rho (x) |e0><e0|) U^dagger].
DensityMatrix stinespring_apply(const KrausChannel& ch, const DensityMatrix& rho);

enum class NoiseFamily { depolarizing, haar_random, lindblad };

std::string to_string(NoiseFamily family);
NoiseFamily noise_family_from_string(const std::string& name);

struct NoiseSchedule {
  NoiseFamily family = NoiseFamily::haar_random;
  int depth = 10;        ///< L_f
  int kraus_count = 4;   ///< K_f, used by haar_random only
  double p_max = 0.8;    ///< depolarizing ramp p_t = p_max t / L_f
  double lindblad_gamma = 1.0;  ///< per-qubit Pauli jump rate
  double lindblad_omega = 0.0;  ///< H_s = (omega/2) sum_j Z_j
  double lindblad_dt = 0.002;
  int lindblad_substeps = 50;   ///< discrete steps composed into one diffusion step
  std::uint64_t seed = 0;

  void validate() const;
};

/// p_t for step t in 1..depth.
double depolarizing_strength(int t, int depth, double p_max);

/// Per-qubit Pauli-noise generator used by the lindblad family.
LindbladSpec lindblad_schedule_spec(const NoiseSchedule& schedule, Index dim);

/// L_f channels, deterministic in the schedule (including its seed).
std::vector<Channel> build_forward_sequence(const NoiseSchedule& schedule, Index dim);

}  // namespace ccmqd
