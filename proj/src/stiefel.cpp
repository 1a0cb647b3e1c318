#include "ccmqd/stiefel.hpp"

#include <algorithm>
#include <cmath>

namespace ccmqd {

StiefelPoint::StiefelPoint(CMatrix kappa, Index dim, double tol) : dim_(dim), kappa_(std::move(kappa)) {
  if (dim < 1 || kappa_.cols() != dim || kappa_.rows() % dim != 0 || kappa_.rows() == 0)
    throw DimensionError("StiefelPoint: kappa must be (dim*N) x dim");
  if (!kappa_.allFinite()) throw InvalidStateError("StiefelPoint: non-finite entries");
  const double d = isometry_defect(kappa_);
  if (d > tol) throw InvalidStateError("StiefelPoint: orthonormality defect " + std::to_string(d));
}

std::vector<CMatrix> BackwardModel::kappas() const {
  std::vector<CMatrix> out;
  out.reserve(blocks.size());
  for (const StiefelPoint& b : blocks) out.push_back(b.kappa());
  return out;
}

BackwardModel init_backward(int depth, int kraus_count, Index dim, Rng& rng) {
  if (depth < 1 || kraus_count < 1 || dim < 1) throw ConfigError("init_backward: counts must be >= 1");
  BackwardModel model{dim, kraus_count, {}};
  for (int t = 1; t <= depth; ++t) {
    Rng block_rng = rng.split(std::uint64_t(t));
    const CMatrix u = haar_unitary(dim * kraus_count, block_rng);
    model.blocks.emplace_back(u.leftCols(dim), dim);
  }
  return model;
}

BackwardModel identity_backward(int depth, int kraus_count, Index dim) {
  if (depth < 1 || kraus_count < 1 || dim < 1) throw ConfigError("identity_backward: counts must be >= 1");
  BackwardModel model{dim, kraus_count, {}};
  CMatrix kappa = CMatrix::Zero(dim * kraus_count, dim);
  kappa.topRows(dim) = CMatrix::Identity(dim, dim);
  for (int t = 1; t <= depth; ++t) model.blocks.emplace_back(kappa, dim);
  return model;
}

std::vector<DensityMatrix> apply_backward(const BackwardModel& model, const DensityMatrix& rho_l) {
  if (rho_l.dim() != model.dim) throw DimensionError("apply_backward: state/model dimension mismatch");
  const int depth = model.depth();
  std::vector<DensityMatrix> states(std::size_t(depth + 1), rho_l);
  for (int t = depth; t >= 1; --t) {
    const StiefelPoint& block = model.blocks[std::size_t(t - 1)];
    const CMatrix& rho = states[std::size_t(t)].matrix();
    CMatrix out = CMatrix::Zero(model.dim, model.dim);
    for (Index i = 0; i < block.count(); ++i) out.noalias() += block.op(i) * rho * block.op(i).adjoint();
    states[std::size_t(t - 1)] = DensityMatrix::sanitize(out);
  }
  return states;
}

std::vector<CMatrix> loss_gradient(const BackwardModel& model, const Trajectory& traj, const LossSpec& spec) {
  if (model.dim != traj.dim()) throw DimensionError("loss_gradient: model/trajectory dimension mismatch");
  const LossContext ctx(traj, spec, model.depth());
  return ctx.gradient(model.kappas()).blocks;
}

GradientReport fd_oracle(const BackwardModel& model, const Trajectory& traj, const LossSpec& spec, double h) {
  if (model.dim != traj.dim()) throw DimensionError("fd_oracle: model/trajectory dimension mismatch");
  const LossContext ctx(traj, spec, model.depth());
  std::vector<CMatrix> kappas = model.kappas();

  GradientReport report;
  report.analytic = ctx.gradient(kappas).blocks;
  report.fd.reserve(kappas.size());

  const Complex i_unit(0.0, 1.0);
  auto loss_at = [&](std::size_t b, Index r, Index c, Complex delta) {
    const Complex saved = kappas[b](r, c);
    kappas[b](r, c) = saved + delta;
    const double l = ctx.evaluate(kappas).loss;
    kappas[b](r, c) = saved;
    return l;
  };

  for (std::size_t b = 0; b < kappas.size(); ++b) {
    CMatrix fd(kappas[b].rows(), kappas[b].cols());
    for (Index c = 0; c < kappas[b].cols(); ++c)
      for (Index r = 0; r < kappas[b].rows(); ++r) {
        const double dx = (loss_at(b, r, c, h) - loss_at(b, r, c, -h)) / (2.0 * h);
        const double dy = (loss_at(b, r, c, i_unit * h) - loss_at(b, r, c, -i_unit * h)) / (2.0 * h);
        fd(r, c) = 0.5 * Complex(dx, dy);
      }

    const CMatrix& a = report.analytic[b];
    for (Index k = 0; k < fd.size(); ++k) {
      const double diff = std::abs(a(k) - fd(k));
      report.max_abs_deviation = std::max(report.max_abs_deviation, diff);
      const double mag = std::max(std::abs(a(k)), std::abs(fd(k)));
      if (mag > 1e-8) report.max_relative_deviation = std::max(report.max_relative_deviation, diff / std::abs(a(k)));
    }
    report.fd.push_back(std::move(fd));
  }
  return report;
}

StiefelPoint cayley_update(const StiefelPoint& point, const CMatrix& grad, double tau, CayleyStats* stats) {
  const CMatrix& k0 = point.kappa();
  if (grad.rows() != k0.rows() || grad.cols() != k0.cols()) throw DimensionError("cayley_update: gradient shape mismatch");
  if (tau == 0.0 || grad.isZero(0.0)) return point;

  const Index n = k0.cols();
  CMatrix u(k0.rows(), 2 * n);
  u << grad, k0;
  CMatrix v(k0.rows(), 2 * n);
  v << k0, -grad;

  const CMatrix vt_u = v.adjoint() * u;
  const CMatrix system = CMatrix::Identity(2 * n, 2 * n) + (0.5 * tau) * vt_u;
  const CMatrix rhs = v.adjoint() * k0;
  const CMatrix x = solve_small(system, rhs);
  CMatrix kappa = k0 - tau * (u * x);

  if (!kappa.allFinite()) throw SingularMatrixError("cayley_update: non-finite update");
  if (isometry_defect(kappa) > 1e-10) {
    kappa = polar_isometry(kappa);
    if (stats) ++stats->reprojections;
  }
  return StiefelPoint(std::move(kappa), point.dim());
}

double riemannian_gradient_norm(const StiefelPoint& point, const CMatrix& grad) {
  const CMatrix& k = point.kappa();
  return (grad - k * (grad.adjoint() * k)).norm();
}

}  // namespace ccmqd
