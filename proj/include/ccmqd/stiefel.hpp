#pragma once

#include <span>
#include <vector>

#include "ccmqd/channel.hpp"
#include "ccmqd/loss.hpp"

namespace ccmqd {

/// Orthonormality tolerance kept by every StiefelPoint.
inline constexpr double kStiefelTol = 1e-8;

/// K stacked Kraus operators kappa in C^{(dim K) x dim} with kappa^dagger kappa = I.
class StiefelPoint {
 public:
  /// Throws InvalidStateError when ||kappa^dagger kappa - I||_F > tol.
  StiefelPoint(CMatrix kappa, Index dim, double tol = kStiefelTol);

  Index dim() const noexcept { return dim_; }
  Index count() const noexcept { return kappa_.rows() / dim_; }
  const CMatrix& kappa() const noexcept { return kappa_; }
  double defect() const { return isometry_defect(kappa_); }

  auto op(Index i) const { return kappa_.middleRows(i * dim_, dim_); }
  KrausChannel channel() const { return KrausChannel::from_isometry(kappa_, dim_); }

 private:
  Index dim_;
  CMatrix kappa_;
};

/// Learned denoising chain; blocks[t - 1] holds the Kraus stack of step t,
/// each block independently on its own Stiefel manifold.
struct BackwardModel {
  Index dim = 0;
  int kraus_count = 0;
  std::vector<StiefelPoint> blocks;

  int depth() const noexcept { return int(blocks.size()); }
  std::vector<CMatrix> kappas() const;
};

/// Haar-random isometry per block (block t uses rng.split(t)).
BackwardModel init_backward(int depth, int kraus_count, Index dim, Rng& rng);

/// kappa = [I; 0; ...; 0] per block.
BackwardModel identity_backward(int depth, int kraus_count, Index dim);

/// rho_hat_t for t = 0..L_b, element L_b being the input. Each state is
/// re-symmetrized and trace-renormalized.
std::vector<DensityMatrix> apply_backward(const BackwardModel& model, const DensityMatrix& rho_l);

/// dL/d(kappa*) for every block (conjugate-coefficient convention:
/// L(kappa + delta) ~ L(kappa) + 2 Re Tr(G^dagger delta)).
std::vector<CMatrix> loss_gradient(const BackwardModel& model, const Trajectory& traj, const LossSpec& spec);

struct GradientReport {
  std::vector<CMatrix> analytic;
  std::vector<CMatrix> fd;
  /// max |a - fd| / |a| over entries with max(|a|, |fd|) > 1e-8
  double max_relative_deviation = 0.0;
  double max_abs_deviation = 0.0;
};

/// Central differences on the real and imaginary part of every kappa entry,
/// combined as (dL/dx + i dL/dy) / 2 to match loss_gradient.
GradientReport fd_oracle(const BackwardModel& model, const Trajectory& traj, const LossSpec& spec, double h = 1e-5);

/// Counts polar re-projections done by cayley_update.
struct CayleyStats {
  int reprojections = 0;
};

/// kappa0 - tau U (I + tau/2 V^dagger U)^{-1} V^dagger kappa0 with U = [G, kappa0]
/// and V = [kappa0, -G]. The result is polar-projected back onto the manifold
/// if roundoff pushed the defect above 1e-10. Throws SingularMatrixError when
/// the 2n x 2n system is singular.
StiefelPoint cayley_update(const StiefelPoint& point, const CMatrix& grad, double tau, CayleyStats* stats = nullptr);

/// ||(G kappa^dagger - kappa G^dagger) kappa||_F, the norm of the Cayley
/// descent direction (zero exactly at stationary points).
double riemannian_gradient_norm(const StiefelPoint& point, const CMatrix& grad);

}  // namespace ccmqd
