#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "ccmqd/channel.hpp"
#include "ccmqd/state.hpp"

namespace ccmqd {

/// States rho_0 .. rho_L of a forward pass with per-step diagnostics.
struct Trajectory {
  std::vector<DensityMatrix> states;
  std::vector<double> purity;
  std::vector<double> entropy_bits;
  std::vector<double> fidelity_to_origin;  ///< F(rho_t, rho_0)
  NoiseSchedule schedule;
  PureState target = PureState::basis_zero(1);

  int depth() const noexcept { return int(states.size()) - 1; }
  Index dim() const noexcept { return target.dim(); }
};

/// rho_t = channels[t-1](rho_{t-1}) starting from the target projector.
Trajectory run_forward(const PureState& target, std::span<const Channel> channels, const NoiseSchedule& schedule = {});

struct NearMixedReport {
  bool pass = false;
  double residual = 0.0;  ///< ||rho_L - I/d||_F
};

NearMixedReport near_mixed_check(const Trajectory& traj, double eps = 0.1);

/// Columns step,purity,entropy_bits,fidelity_to_origin.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

/// Columns step,x,y,z,purity for a sequence of single-qubit states. `steps`
/// labels each row.
void write_bloch_csv(std::ostream& os, std::span<const DensityMatrix> states, std::span<const int> steps);

}  // namespace ccmqd
