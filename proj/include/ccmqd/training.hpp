#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ccmqd/diffusion.hpp"
#include "ccmqd/loss.hpp"
#include "ccmqd/stiefel.hpp"

namespace ccmqd {

enum class Strategy { sqco, hqto };
enum class InitKind { haar, identity };

std::string to_string(Strategy s);
std::string to_string(InitKind k);
Strategy strategy_from_string(const std::string& name);
InitKind init_kind_from_string(const std::string& name);

struct TrainConfig {
  int n_qubits = 1;
  NoiseSchedule schedule;
  int backward_depth = 10;  ///< L_b
  int backward_kraus = 10;  ///< K_b
  Strategy strategy = Strategy::hqto;
  LossSpec loss;
  TargetKind target = TargetKind::haar;
  InitKind init = InitKind::haar;
  int max_iters = 2000;
  double convergence_eps = 1e-9;
  double tau0 = 0.05;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  /// Keep forward/backward states and the trained model in each SeedResult.
  bool keep_states = true;

  Index dim() const { return Index(1) << n_qubits; }
  void validate() const;
};

/// Largest number of consecutive step-size halvings per iteration.
inline constexpr int kMaxHalvings = 20;

struct SeedResult {
  std::uint64_t seed = 0;
  std::uint64_t forward_seed = 0;  ///< schedule seed derived from `seed`
  bool failed = false;
  std::string error;
  bool converged = false;
  double final_fidelity = 0.0;  ///< F(rho_0, rho_hat_0) of the composed chain
  int iterations = 0;           ///< accepted updates
  int reprojections = 0;
  /// Entry k is the state after k accepted updates (entry 0 is the initial model).
  std::vector<double> loss_curve;
  /// fidelity_curves[k][t] = F(rho_{align(t)}, rho_hat_t) after k updates.
  std::vector<std::vector<double>> fidelity_curves;
  /// SQCO only: converged local fidelity F(rho_{t-1}, E_t(rho_t)) per step t = 1..L_b.
  std::vector<double> step_fidelities;
  double wall_time = 0.0;

  std::optional<PureState> target;
  std::vector<DensityMatrix> forward_states;   ///< rho_0..rho_{L_f}
  std::vector<DensityMatrix> backward_states;  ///< rho_hat_0..rho_hat_{L_b}
  std::optional<BackwardModel> model;
};

struct RunResult {
  TrainConfig config;
  std::vector<SeedResult> seeds;
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation, 0 for one sample
  bool single_sample = false;
  bool partial = false;  ///< at least one seed failed
  double wall_time = 0.0;
};

struct TrainOutcome {
  BackwardModel model;
  SeedResult result;
};

/// Joint optimization of all blocks on cfg.loss (kind hqto or pc) by Cayley
/// steps with backtracking.
TrainOutcome train_hqto(const Trajectory& traj, const TrainConfig& cfg, Rng& rng);

/// Each block trained on its own step loss, then the chain composed. Requires
/// L_b = L_f.
TrainOutcome train_sqco(const Trajectory& traj, const TrainConfig& cfg, Rng& rng);

/// (1 - F(rho_0, rho_hat_0)) + lambda sum_t alpha_t (1 - F(rho_{align(t)}, rho_hat_t))
/// in cfg.loss.form. `backward_states` holds rho_hat_0..rho_hat_{L_b}.
double pc_loss(const Trajectory& traj, std::span<const DensityMatrix> backward_states, const LossSpec& spec);

/// Fresh target, forward chain, init and training per seed. Seed failures are
/// recorded in the result. `threads` <= 0 means hardware concurrency.
RunResult run_experiment(const TrainConfig& cfg, int threads = 1);

/// Per-seed pieces derived from the root seed.
struct SeedSetup {
  PureState target;
  NoiseSchedule schedule;
  Rng init_rng;
};
SeedSetup seed_setup(const TrainConfig& cfg, std::uint64_t seed);

/// Single seed of run_experiment; never throws on training failure.
SeedResult run_seed(const TrainConfig& cfg, std::uint64_t seed);

}  // namespace ccmqd
