#include "ccmqd/loss.hpp"

#include <cmath>

namespace ccmqd {

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::sqco_step: return "sqco_step";
    case LossKind::hqto: return "hqto";
    case LossKind::pc: return "pc";
  }
  return "pc";
}

std::string to_string(LossForm form) {
  return form == LossForm::one_minus_F ? "one_minus_F" : "neg_sqrt_F";
}

LossKind loss_kind_from_string(const std::string& name) {
  if (name == "sqco_step") return LossKind::sqco_step;
  if (name == "hqto") return LossKind::hqto;
  if (name == "pc") return LossKind::pc;
  throw ConfigError("unknown loss kind '" + name + "'");
}

LossForm loss_form_from_string(const std::string& name) {
  if (name == "one_minus_F") return LossForm::one_minus_F;
  if (name == "neg_sqrt_F") return LossForm::neg_sqrt_F;
  throw ConfigError("unknown loss form '" + name + "'");
}

void LossSpec::validate(int backward_depth) const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  if (!alpha.empty() && int(alpha.size()) != backward_depth)
    throw ConfigError("alpha must have one weight per backward step (" + std::to_string(backward_depth) + ")");
  for (double a : alpha)
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigError("alpha weights must be finite and >= 0");
  if (kind == LossKind::sqco_step && (step < 1 || step > backward_depth))
    throw ConfigError("sqco_step index out of range");
}

int align_index(int t_backward, int backward_depth, int forward_depth) {
  if (backward_depth < 1 || t_backward < 0 || t_backward > backward_depth)
    throw DimensionError("align_index: backward index out of range");
  // floor(t L_f / L_b + 1/2) == round-half-away-from-zero for non-negative values
  const long long num = 2LL * t_backward * forward_depth + backward_depth;
  return int(num / (2LL * backward_depth));
}

FidelityReference::FidelityReference(const DensityMatrix& rho) : pure_(rank_one_vector(rho)) {
  if (!pure_) sqrt_rho_ = psd_sqrt(rho.matrix());
}

FidelityReference::Value FidelityReference::value(const CMatrix& sigma) const {
  if (pure_) {
    const double f = std::max(pure_->dot(sigma * *pure_).real(), 0.0);
    return {std::sqrt(f), f};
  }
  const double root = trace_sqrt(herm_eigenvalues(sqrt_rho_ * sigma * sqrt_rho_));
  return {root, root * root};
}

FidelityReference::Derivative FidelityReference::derivative(const CMatrix& sigma) const {
  if (pure_) {
    const Value v = value(sigma);
    CMatrix d_fid = *pure_ * pure_->adjoint();
    CMatrix d_root = v.root > 0.0 ? CMatrix(d_fid / (2.0 * v.root)) : CMatrix();
    return {v, std::move(d_fid), std::move(d_root)};
  }
  const HermEig eig = herm_eig(sqrt_rho_ * sigma * sqrt_rho_);
  const double root = trace_sqrt(eig.eigenvalues);
  RVector inv_sqrt(eig.eigenvalues.size());
  for (Index i = 0; i < eig.eigenvalues.size(); ++i) {
    const double mu = eig.eigenvalues(i);
    inv_sqrt(i) = mu > kFidelityPinvCutoff ? 1.0 / std::sqrt(mu) : 0.0;
  }
  const CMatrix middle = eig.eigenvectors * inv_sqrt.cast<Complex>().asDiagonal() * eig.eigenvectors.adjoint();
  CMatrix d_root = 0.5 * sqrt_rho_ * middle * sqrt_rho_;
  if (!d_root.allFinite()) throw NumericalError("fidelity derivative: non-finite result");
  CMatrix d_fid = 2.0 * root * d_root;
  return {{root, root * root}, std::move(d_fid), std::move(d_root)};
}

LossContext::LossContext(const Trajectory& traj, LossSpec spec, int backward_depth)
    : spec_(std::move(spec)),
      backward_depth_(backward_depth),
      forward_depth_(traj.depth()),
      dim_(traj.dim()) {
  if (backward_depth < 1) throw ConfigError("backward depth must be >= 1");
  if (forward_depth_ < 1) throw ConfigError("trajectory has no forward steps");
  spec_.validate(backward_depth);

  references_.reserve(std::size_t(backward_depth + 1));
  for (int t = 0; t <= backward_depth; ++t)
    references_.emplace_back(traj.states[std::size_t(align_index(t, backward_depth, forward_depth_))]);

  switch (spec_.kind) {
    case LossKind::sqco_step:
      first_step_ = last_step_ = spec_.step;
      input_ = traj.states[std::size_t(align_index(spec_.step, backward_depth, forward_depth_))].matrix();
      terms_.push_back({spec_.step - 1, 1.0, true});
      break;
    case LossKind::pc:
    case LossKind::hqto:
      first_step_ = 1;
      last_step_ = backward_depth;
      input_ = traj.states.back().matrix();
      terms_.push_back({0, 1.0, true});
      if (spec_.kind == LossKind::pc && spec_.lambda != 0.0)
        for (int t = 1; t <= backward_depth; ++t) terms_.push_back({t, spec_.lambda * spec_.alpha_at(t), false});
      break;
  }
}

double LossContext::term_value(const Term& term, const FidelityReference::Value& v) const {
  if (spec_.form == LossForm::one_minus_F) return term.weight * (1.0 - v.fidelity);
  return term.endpoint ? -term.weight * v.root : term.weight * (1.0 - v.root);
}

void LossContext::check_blocks(std::span<const CMatrix> blocks) const {
  if (int(blocks.size()) != backward_depth_) throw DimensionError("loss: block count does not match backward depth");
  for (const CMatrix& b : blocks)
    if (b.cols() != dim_ || b.rows() % dim_ != 0 || b.rows() == 0)
      throw DimensionError("loss: block shape must be (dim*K) x dim");
}

namespace {

CMatrix apply_stack(const CMatrix& kappa, const CMatrix& rho, Index d) {
  const CMatrix kr = kappa * rho;
  CMatrix out = CMatrix::Zero(d, d);
  for (Index i = 0; i < kappa.rows() / d; ++i) out.noalias() += kr.middleRows(i * d, d) * kappa.middleRows(i * d, d).adjoint();
  return out;
}

}  // namespace

double LossContext::loss_of_states(std::span<const CMatrix> states) const {
  if (int(states.size()) != backward_depth_ + 1) throw DimensionError("loss: expected L_b + 1 backward states");
  double loss = 0.0;
  for (const Term& term : terms_) {
    const CMatrix& sigma = states[std::size_t(term.t)];
    if (sigma.rows() != dim_ || sigma.cols() != dim_) throw DimensionError("loss: backward state has the wrong shape");
    loss += term_value(term, reference(term.t).value(sigma));
  }
  return loss;
}

LossContext::Evaluation LossContext::evaluate(std::span<const CMatrix> blocks, bool all_fidelities) const {
  check_blocks(blocks);
  Evaluation ev;
  ev.states.assign(std::size_t(backward_depth_ + 1), CMatrix());
  ev.states[std::size_t(last_step_)] = input_;
  for (int t = last_step_; t >= first_step_; --t)
    ev.states[std::size_t(t - 1)] = apply_stack(blocks[std::size_t(t - 1)], ev.states[std::size_t(t)], dim_);

  ev.loss = loss_of_states(ev.states);

  if (all_fidelities) {
    ev.fidelities.assign(std::size_t(backward_depth_ + 1), std::nan(""));
    for (int t = 0; t <= backward_depth_; ++t)
      if (ev.states[std::size_t(t)].size() > 0)
        ev.fidelities[std::size_t(t)] = std::clamp(reference(t).value(ev.states[std::size_t(t)]).fidelity, 0.0, 1.0);
  }
  return ev;
}

LossContext::Gradient LossContext::gradient(std::span<const CMatrix> blocks, bool all_fidelities) const {
  Gradient out;
  out.eval = evaluate(blocks, all_fidelities);
  const auto& states = out.eval.states;

  // Direct cotangents dL/d rho_hat_t from each loss term.
  std::vector<CMatrix> direct(std::size_t(backward_depth_ + 1));
  for (const Term& term : terms_) {
    const CMatrix& sigma = states[std::size_t(term.t)];
    const FidelityReference::Derivative der = reference(term.t).derivative(sigma);
    CMatrix contrib;
    if (spec_.form == LossForm::one_minus_F) {
      contrib = -term.weight * der.d_fidelity;
    } else {
      if (der.d_root.size() == 0)
        throw NumericalError("fidelity derivative: sqrt(F) is not differentiable at zero overlap");
      contrib = -term.weight * der.d_root;
    }
    CMatrix& slot = direct[std::size_t(term.t)];
    if (slot.size() == 0) slot = std::move(contrib);
    else slot += contrib;
  }

  out.blocks.assign(std::size_t(backward_depth_), CMatrix());
  for (int t = 1; t <= backward_depth_; ++t)
    out.blocks[std::size_t(t - 1)] = CMatrix::Zero(blocks[std::size_t(t - 1)].rows(), dim_);

  // Reverse sweep: cotangent at rho_hat_{t-1} -> parameter gradient of step t
  // and cotangent at rho_hat_t.
  CMatrix cot = direct[std::size_t(first_step_ - 1)].size() ? direct[std::size_t(first_step_ - 1)]
                                                             : CMatrix(CMatrix::Zero(dim_, dim_));
  for (int t = first_step_; t <= last_step_; ++t) {
    const CMatrix& kappa = blocks[std::size_t(t - 1)];
    const CMatrix& rho_in = states[std::size_t(t)];
    CMatrix& grad = out.blocks[std::size_t(t - 1)];
    const Index count = kappa.rows() / dim_;
    CMatrix next = CMatrix::Zero(dim_, dim_);
    for (Index i = 0; i < count; ++i) {
      const auto k = kappa.middleRows(i * dim_, dim_);
      const CMatrix cot_k = cot * k;
      grad.middleRows(i * dim_, dim_).noalias() = cot_k * rho_in;
      next.noalias() += k.adjoint() * cot_k;
    }
    if (direct[std::size_t(t)].size()) next += direct[std::size_t(t)];
    cot = std::move(next);
  }
  return out;
}

}  // namespace ccmqd
