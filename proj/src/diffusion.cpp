#include "ccmqd/diffusion.hpp"

#include <ostream>

#include "ccmqd/csv.hpp"

namespace ccmqd {

Trajectory run_forward(const PureState& target, std::span<const Channel> channels, const NoiseSchedule& schedule) {
  Trajectory traj;
  traj.schedule = schedule;
  traj.target = target;
  traj.states.reserve(channels.size() + 1);
  traj.states.push_back(DensityMatrix::from_pure(target));
  for (const Channel& ch : channels) {
    if (ch.dim() != target.dim()) throw DimensionError("run_forward: channel dimension does not match target");
    traj.states.push_back(ch.apply(traj.states.back()));
  }
  for (const DensityMatrix& rho : traj.states) {
    traj.purity.push_back(purity(rho));
    traj.entropy_bits.push_back(von_neumann_entropy(rho));
    traj.fidelity_to_origin.push_back(fidelity(traj.states.front(), rho));
  }
  return traj;
}

NearMixedReport near_mixed_check(const Trajectory& traj, double eps) {
  const DensityMatrix& last = traj.states.back();
  const Index d = last.dim();
  const double residual = (last.matrix() - CMatrix::Identity(d, d) / double(d)).norm();
  return {residual < eps, residual};
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  CsvWriter csv(os);
  csv.row("step", "purity", "entropy_bits", "fidelity_to_origin");
  for (std::size_t t = 0; t < traj.states.size(); ++t)
    csv.row(t, traj.purity[t], traj.entropy_bits[t], traj.fidelity_to_origin[t]);
}

void write_bloch_csv(std::ostream& os, std::span<const DensityMatrix> states, std::span<const int> steps) {
  if (states.size() != steps.size()) throw DimensionError("write_bloch_csv: one step label per state");
  CsvWriter csv(os);
  csv.row("step", "x", "y", "z", "purity");
  for (std::size_t i = 0; i < states.size(); ++i) {
    const auto r = bloch_vector(states[i]);
    csv.row(steps[i], r[0], r[1], r[2], purity(states[i]));
  }
}

}  // namespace ccmqd
