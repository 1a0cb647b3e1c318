#include <cmath>

#include "ccmqd/errors.hpp"
#include "ccmqd/training.hpp"
#include "test_util.hpp"

using namespace ccmqd;
using namespace ccmqd::test;

namespace {

TrainConfig small_config() {
  TrainConfig cfg;
  cfg.n_qubits = 1;
  cfg.schedule.depth = 3;
  cfg.schedule.kraus_count = 2;
  cfg.backward_depth = 3;
  cfg.backward_kraus = 2;
  cfg.max_iters = 200;
  cfg.seeds = {0, 1};
  return cfg;
}

Trajectory identity_trajectory(int qubits, int depth) {
  const std::vector<Channel> ids(std::size_t(depth), Channel(KrausChannel::identity(Index(1) << qubits)));
  Rng rng(7);
  return run_forward(random_pure_state(qubits, rng), ids);
}

}  // namespace

TEST(TrainConfig, Validation) {
  TrainConfig cfg = small_config();
  EXPECT_NO_THROW(cfg.validate());
  cfg.n_qubits = 8;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.strategy = Strategy::sqco;
  cfg.backward_depth = 4;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.loss.kind = LossKind::sqco_step;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = small_config();
  cfg.seeds.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(strategy_from_string("adam"), ConfigError);
  EXPECT_EQ(strategy_from_string(to_string(Strategy::sqco)), Strategy::sqco);
  EXPECT_EQ(init_kind_from_string(to_string(InitKind::identity)), InitKind::identity);
}

TEST(TrainHqto, IdentityChainIsInverted) {
  const Trajectory traj = identity_trajectory(1, 3);
  TrainConfig cfg = small_config();
  cfg.loss.kind = LossKind::hqto;
  Rng rng(1);
  const TrainOutcome out = train_hqto(traj, cfg, rng);
  EXPECT_GT(out.result.final_fidelity, 1.0 - 1e-6);
  EXPECT_LE(out.result.iterations, 200);
}

TEST(TrainHqto, CurvesAreConsistent) {
  TrainConfig cfg = small_config();
  cfg.seeds = {3};
  const SeedResult r = run_seed(cfg, 3);
  ASSERT_FALSE(r.failed) << r.error;
  ASSERT_EQ(r.loss_curve.size(), std::size_t(r.iterations) + 1);
  ASSERT_EQ(r.fidelity_curves.size(), r.loss_curve.size());
  double bound = 1.0 + cfg.loss.lambda * cfg.backward_depth;
  for (std::size_t k = 0; k < r.loss_curve.size(); ++k) {
    EXPECT_GE(r.loss_curve[k], 0.0);
    EXPECT_LE(r.loss_curve[k], bound);
    if (k > 0) EXPECT_LE(r.loss_curve[k], r.loss_curve[k - 1]);
    ASSERT_EQ(r.fidelity_curves[k].size(), std::size_t(cfg.backward_depth) + 1);
    for (double f : r.fidelity_curves[k]) {
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0 + 1e-9);
    }
  }
  EXPECT_EQ(r.final_fidelity, r.fidelity_curves.back()[0]);
  EXPECT_EQ(r.backward_states.size(), std::size_t(cfg.backward_depth) + 1);
  EXPECT_NEAR(fidelity(DensityMatrix::from_pure(*r.target), r.backward_states[0]), r.final_fidelity, 1e-9);
  ASSERT_TRUE(r.model.has_value());
  for (const StiefelPoint& b : r.model->blocks) EXPECT_LT(b.defect(), 1e-8);
}

TEST(TrainHqto, PcLossCurveMatchesDefinition) {
  TrainConfig cfg = small_config();
  const SeedSetup setup = seed_setup(cfg, 5);
  const auto channels = build_forward_sequence(setup.schedule, cfg.dim());
  const Trajectory traj = run_forward(setup.target, channels, setup.schedule);
  Rng rng = setup.init_rng;
  const TrainOutcome out = train_hqto(traj, cfg, rng);
  const auto states = apply_backward(out.model, traj.states.back());
  EXPECT_NEAR(pc_loss(traj, states, cfg.loss), out.result.loss_curve.back(), 1e-12);
  LossSpec wrong = cfg.loss;
  wrong.kind = LossKind::hqto;
  EXPECT_THROW(pc_loss(traj, states, wrong), ConfigError);
}

TEST(TrainSqco, UnitaryChainSolvesEveryStep) {
  NoiseSchedule s;
  s.depth = 3;
  s.kraus_count = 1;
  s.seed = 11;
  Rng rng(12);
  const PureState psi = random_pure_state(1, rng);
  const Trajectory traj = run_forward(psi, build_forward_sequence(s, 2), s);
  TrainConfig cfg = small_config();
  cfg.strategy = Strategy::sqco;
  const TrainOutcome out = train_sqco(traj, cfg, rng);
  ASSERT_EQ(out.result.step_fidelities.size(), 3u);
  for (double f : out.result.step_fidelities) EXPECT_GT(f, 1.0 - 1e-6);
  EXPECT_GT(out.result.final_fidelity, 1.0 - 1e-5);
}

TEST(TrainSqco, RequiresMatchingDepths) {
  const Trajectory traj = identity_trajectory(1, 3);
  TrainConfig cfg = small_config();
  cfg.strategy = Strategy::sqco;
  cfg.backward_depth = 2;
  Rng rng(1);
  EXPECT_THROW(train_sqco(traj, cfg, rng), ConfigError);
}

TEST(RunExperiment, DeterministicAcrossThreadCounts) {
  TrainConfig cfg = small_config();
  cfg.max_iters = 30;
  cfg.seeds = {0, 1, 2};
  const RunResult a = run_experiment(cfg, 1);
  const RunResult b = run_experiment(cfg, 3);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std, b.std);
  ASSERT_EQ(a.seeds.size(), b.seeds.size());
  for (std::size_t i = 0; i < a.seeds.size(); ++i) {
    EXPECT_EQ(a.seeds[i].seed, b.seeds[i].seed);
    EXPECT_EQ(a.seeds[i].loss_curve, b.seeds[i].loss_curve);
    EXPECT_EQ(a.seeds[i].final_fidelity, b.seeds[i].final_fidelity);
  }
}

TEST(RunExperiment, SampleStatistics) {
  TrainConfig cfg = small_config();
  cfg.max_iters = 20;
  cfg.seeds = {4};
  const RunResult one = run_experiment(cfg);
  EXPECT_TRUE(one.single_sample);
  EXPECT_EQ(one.std, 0.0);
  EXPECT_EQ(one.mean, one.seeds[0].final_fidelity);

  cfg.seeds = {4, 5, 6};
  const RunResult many = run_experiment(cfg);
  EXPECT_FALSE(many.single_sample);
  double mean = 0.0, ss = 0.0;
  for (const SeedResult& s : many.seeds) mean += s.final_fidelity / 3.0;
  for (const SeedResult& s : many.seeds) ss += (s.final_fidelity - mean) * (s.final_fidelity - mean);
  EXPECT_NEAR(many.mean, mean, 1e-15);
  EXPECT_NEAR(many.std, std::sqrt(ss / 2.0), 1e-15);
}

TEST(RunExperiment, SeedFailureIsRecorded) {
  TrainConfig cfg = small_config();
  cfg.schedule.family = NoiseFamily::lindblad;
  cfg.schedule.lindblad_dt = 0.5;
  cfg.max_iters = 5;
  cfg.seeds = {0};
  const SeedResult r = run_seed(cfg, 0);
  EXPECT_TRUE(r.failed);
  EXPECT_FALSE(r.error.empty());
}

TEST(RunExperiment, DistinctSeedsDiffer) {
  TrainConfig cfg = small_config();
  const SeedSetup a = seed_setup(cfg, 0), b = seed_setup(cfg, 1);
  EXPECT_NE(a.schedule.seed, b.schedule.seed);
  EXPECT_GT((a.target.amplitudes() - b.target.amplitudes()).norm(), 1e-6);
  const SeedSetup again = seed_setup(cfg, 0);
  EXPECT_EQ(a.target.amplitudes(), again.target.amplitudes());
}

TEST(TrainSqco, OneQubitRandomNoiseBand) {
  TrainConfig cfg;
  cfg.strategy = Strategy::sqco;
  cfg.keep_states = false;
  const RunResult r = run_experiment(cfg);
  ASSERT_FALSE(r.partial);
  EXPECT_GE(r.mean, 0.6);
  EXPECT_LE(r.mean, 0.97);
}
