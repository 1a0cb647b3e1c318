#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccmqd/diffusion.hpp"
#include "ccmqd/linalg.hpp"

namespace ccmqd {

enum class LossKind { sqco_step, hqto, pc };

/// one_minus_F: 1 - F per term. neg_sqrt_F: -sqrt(F) for the endpoint and
/// 1 - sqrt(F) for path terms.
enum class LossForm { one_minus_F, neg_sqrt_F };

std::string to_string(LossKind kind);
std::string to_string(LossForm form);
LossKind loss_kind_from_string(const std::string& name);
LossForm loss_form_from_string(const std::string& name);

struct LossSpec {
  LossKind kind = LossKind::pc;
  double lambda = 0.02;
  /// Per-step path weights alpha_1..alpha_{L_b}; empty means all ones.
  std::vector<double> alpha;
  LossForm form = LossForm::one_minus_F;
  /// Backward step trained by a sqco_step loss (1..L_b).
  int step = 1;

  double alpha_at(int t) const { return alpha.empty() ? 1.0 : alpha[std::size_t(t - 1)]; }
  void validate(int backward_depth) const;
};

/// Forward index paired with backward index t: round(t L_f / L_b), halves
/// rounded away from zero.
int align_index(int t_backward, int backward_depth, int forward_depth);

/// Pseudo-inverse cutoff for the mixed-reference fidelity derivative.
inline constexpr double kFidelityPinvCutoff = 1e-10;

/// Fidelity against a fixed reference state, with its derivative in sigma.
/// Pure references use <psi|sigma|psi>; mixed ones the Uhlmann form with a
/// cached square root.
class FidelityReference {
 public:
  explicit FidelityReference(const DensityMatrix& rho);

  bool is_pure() const noexcept { return pure_.has_value(); }

  /// sqrt(F) and F for an arbitrary PSD sigma (not necessarily unit trace).
  struct Value {
    double root = 0.0;  ///< Tr sqrt(sqrt(rho) sigma sqrt(rho))
    double fidelity = 0.0;
  };
  Value value(const CMatrix& sigma) const;

  /// Value plus the Hermitian derivatives dF/dsigma and dsqrt(F)/dsigma, in the
  /// sense dF = Re Tr(D dsigma). d_root is empty where sqrt(F) is not
  /// differentiable (zero overlap with a pure reference).
  struct Derivative {
    Value value;
    CMatrix d_fidelity;
    CMatrix d_root;
  };
  Derivative derivative(const CMatrix& sigma) const;

 private:
  std::optional<CVector> pure_;
  CMatrix sqrt_rho_;
};

/// Loss over a chain of backward blocks, evaluated on raw Kraus stacks
/// (off-manifold points allowed, no renormalization) so that finite
/// differences and the analytic gradient see the same function.
///
/// Block b (0-based) implements backward step t = b + 1:
/// rho_hat_{t-1} = sum_i k_i rho_hat_t k_i^dagger, starting from
/// rho_hat_{L_b} = rho_{L_f}.
class LossContext {
 public:
  LossContext(const Trajectory& traj, LossSpec spec, int backward_depth);

  const LossSpec& spec() const noexcept { return spec_; }
  int backward_depth() const noexcept { return backward_depth_; }
  Index dim() const noexcept { return dim_; }

  struct Evaluation {
    double loss = 0.0;
    /// rho_hat_t for t = 0..L_b. For sqco_step only the step's input and output are set.
    std::vector<CMatrix> states;
    /// F(rho_{align(t)}, rho_hat_t) for t = 0..L_b when requested, else empty.
    std::vector<double> fidelities;
  };

  Evaluation evaluate(std::span<const CMatrix> blocks, bool all_fidelities = false) const;

  /// Loss of given backward states rho_hat_0..rho_hat_{L_b}; only the indices
  /// the loss reads need to be set.
  double loss_of_states(std::span<const CMatrix> states) const;

  struct Gradient {
    Evaluation eval;
    /// dL/d(kappa*) per block, same layout as the block ((dim*K) x dim).
    std::vector<CMatrix> blocks;
  };

  Gradient gradient(std::span<const CMatrix> blocks, bool all_fidelities = false) const;

 private:
  struct Term {
    int t = 0;  ///< backward state index
    double weight = 0.0;
    bool endpoint = false;
  };

  double term_value(const Term& term, const FidelityReference::Value& v) const;
  void check_blocks(std::span<const CMatrix> blocks) const;
  const FidelityReference& reference(int t) const { return references_[std::size_t(t)]; }

  LossSpec spec_;
  int backward_depth_;
  int forward_depth_;
  Index dim_;
  std::vector<FidelityReference> references_;  ///< by backward index t
  std::vector<Term> terms_;
  CMatrix input_;  ///< rho_{L_f}, or the step input for sqco_step
  int first_step_ = 1;
  int last_step_ = 1;
};

}  // namespace ccmqd
