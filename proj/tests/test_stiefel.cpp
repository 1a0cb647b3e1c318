#include <cmath>

#include "ccmqd/errors.hpp"
#include "ccmqd/stiefel.hpp"
#include "test_util.hpp"

using namespace ccmqd;
using namespace ccmqd::test;

namespace {

Trajectory random_trajectory(int qubits, int depth, int kraus, std::uint64_t seed) {
  NoiseSchedule s;
  s.depth = depth;
  s.kraus_count = kraus;
  s.seed = seed;
  Rng rng(seed + 1000);
  return run_forward(random_pure_state(qubits, rng), build_forward_sequence(s, Index(1) << qubits), s);
}

LossSpec spec_of(LossKind kind, int step = 1) {
  LossSpec s;
  s.kind = kind;
  s.lambda = 0.3;
  s.step = step;
  return s;
}

double model_loss(const BackwardModel& m, const Trajectory& traj, const LossSpec& spec) {
  return LossContext(traj, spec, m.depth()).evaluate(m.kappas()).loss;
}

}  // namespace

TEST(StiefelPoint, RejectsNonIsometry) {
  EXPECT_THROW(StiefelPoint(CMatrix::Ones(4, 2), 2), InvalidStateError);
  EXPECT_THROW(StiefelPoint(CMatrix::Identity(3, 2), 2), DimensionError);
}

TEST(InitBackward, BlocksAreCptp) {
  Rng rng(1);
  const BackwardModel m = init_backward(5, 3, 4, rng);
  ASSERT_EQ(m.depth(), 5);
  for (const StiefelPoint& b : m.blocks) {
    EXPECT_LT(b.defect(), 1e-10);
    EXPECT_TRUE(verify_cptp(b.channel().ops(), 1e-9).pass);
    EXPECT_EQ(b.count(), 3);
  }
}

TEST(InitBackward, SingleOperatorBlocksAreUnitary) {
  Rng rng(2);
  const BackwardModel m = init_backward(3, 1, 4, rng);
  for (const StiefelPoint& b : m.blocks)
    EXPECT_LT((b.kappa() * b.kappa().adjoint() - CMatrix::Identity(4, 4)).norm(), 1e-12);
}

TEST(InitBackward, SeedDeterminesModel) {
  Rng a(3), b(3);
  const BackwardModel x = init_backward(4, 2, 2, a), y = init_backward(4, 2, 2, b);
  for (int t = 0; t < 4; ++t) EXPECT_EQ(x.blocks[std::size_t(t)].kappa(), y.blocks[std::size_t(t)].kappa());
  EXPECT_THROW(init_backward(0, 2, 2, a), ConfigError);
}

TEST(ApplyBackward, IdentityBlocksKeepTheInput) {
  Rng rng(4);
  const DensityMatrix rho = DensityMatrix::from_matrix(random_mixed(4, rng));
  const auto states = apply_backward(identity_backward(6, 3, 4), rho);
  ASSERT_EQ(states.size(), 7u);
  for (const DensityMatrix& s : states) EXPECT_LT((s.matrix() - rho.matrix()).norm(), 1e-14);
}

TEST(ApplyBackward, UnitaryStep) {
  Rng rng(5);
  const CMatrix u = haar_unitary(2, rng);
  BackwardModel m{2, 1, {StiefelPoint(u, 2)}};
  const DensityMatrix rho = DensityMatrix::from_matrix(random_mixed(2, rng));
  const auto states = apply_backward(m, rho);
  EXPECT_LT((states[0].matrix() - u * rho.matrix() * u.adjoint()).norm(), 1e-14);
}

TEST(ApplyBackward, TraceAndPositivityPreserved) {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const BackwardModel m = init_backward(5, 1 + trial % 4, 4, rng);
    const auto states = apply_backward(m, DensityMatrix::from_matrix(random_mixed(4, rng)));
    for (const DensityMatrix& s : states) {
      EXPECT_NEAR(s.matrix().trace().real(), 1.0, 1e-9);
      EXPECT_GE(herm_eigenvalues(s.matrix()).minCoeff(), -1e-9);
    }
  }
  EXPECT_THROW(apply_backward(init_backward(2, 2, 4, rng), DensityMatrix::maximally_mixed(2)), DimensionError);
}

TEST(LossGradient, MatchesFiniteDifferencesForEveryLoss) {
  for (int qubits : {1, 2}) {
    for (LossKind kind : {LossKind::sqco_step, LossKind::hqto, LossKind::pc}) {
      for (LossForm form : {LossForm::one_minus_F, LossForm::neg_sqrt_F}) {
        const Trajectory traj = random_trajectory(qubits, 3, 2, 10 + std::uint64_t(qubits));
        Rng rng(20 + std::uint64_t(qubits));
        const BackwardModel m = init_backward(3, 2, traj.dim(), rng);
        LossSpec spec = spec_of(kind, 2);
        spec.form = form;
        const GradientReport rep = fd_oracle(m, traj, spec, 1e-5);
        EXPECT_LT(rep.max_relative_deviation, 1e-5) << to_string(kind) << " " << to_string(form) << " " << qubits;
      }
    }
  }
}

TEST(LossGradient, MismatchedBackwardDepthUsesAlignment) {
  const Trajectory traj = random_trajectory(1, 3, 2, 30);
  Rng rng(31);
  const BackwardModel m = init_backward(5, 2, 2, rng);
  EXPECT_LT(fd_oracle(m, traj, spec_of(LossKind::pc), 1e-5).max_relative_deviation, 1e-5);
}

TEST(LossGradient, SingleStepClosedForm) {
  const Trajectory traj = random_trajectory(1, 1, 2, 40);
  Rng rng(41);
  const BackwardModel m = init_backward(1, 1, 2, rng);
  const auto g = loss_gradient(m, traj, spec_of(LossKind::hqto));
  const CVector& psi = traj.target.amplitudes();
  const CMatrix expected = -(psi * psi.adjoint()) * m.blocks[0].kappa() * traj.states[1].matrix();
  EXPECT_LT((g[0] - expected).norm(), 1e-14);
}

TEST(LossGradient, StationaryAtAnExactInverse) {
  // Unitary forward chain inverted exactly by the backward blocks.
  NoiseSchedule s;
  s.depth = 4;
  s.kraus_count = 1;
  s.seed = 50;
  Rng rng(51);
  const PureState psi = random_pure_state(2, rng);
  const auto channels = build_forward_sequence(s, 4);
  const Trajectory traj = run_forward(psi, channels, s);
  BackwardModel m{4, 2, {}};
  for (const Channel& ch : channels) {
    CMatrix kappa = CMatrix::Zero(8, 4);
    kappa.topRows(4) = ch.kraus()->ops()[0].adjoint();
    m.blocks.emplace_back(kappa, 4);
  }
  for (LossKind kind : {LossKind::hqto, LossKind::pc}) {
    const auto g = loss_gradient(m, traj, spec_of(kind));
    for (std::size_t b = 0; b < g.size(); ++b) EXPECT_LT(riemannian_gradient_norm(m.blocks[b], g[b]), 1e-7);
  }
}

TEST(FdOracle, ZeroGradientPoint) {
  // Identity forward chain: identity blocks are at the optimum.
  const PureState psi = PureState::plus(1);
  const std::vector<Channel> ids(2, Channel(KrausChannel::identity(2)));
  const Trajectory traj = run_forward(psi, ids);
  const GradientReport rep = fd_oracle(identity_backward(2, 1, 2), traj, spec_of(LossKind::hqto), 1e-5);
  EXPECT_LT(rep.max_abs_deviation, 1e-8);
}

TEST(FdOracle, ErrorShrinksQuadratically) {
  const Trajectory traj = random_trajectory(1, 2, 2, 60);
  Rng rng(61);
  const BackwardModel m = init_backward(2, 2, 2, rng);
  const double coarse = fd_oracle(m, traj, spec_of(LossKind::pc), 1e-3).max_abs_deviation;
  const double fine = fd_oracle(m, traj, spec_of(LossKind::pc), 1e-4).max_abs_deviation;
  EXPECT_GT(coarse / fine, 30.0);
  // Richardson-style agreement across the two finest steps.
  const GradientReport a = fd_oracle(m, traj, spec_of(LossKind::pc), 1e-4);
  const GradientReport b = fd_oracle(m, traj, spec_of(LossKind::pc), 1e-5);
  for (std::size_t i = 0; i < a.fd.size(); ++i) EXPECT_LT((a.fd[i] - b.fd[i]).norm(), 1e-7);
}

TEST(CayleyUpdate, TrivialInputsReturnThePoint) {
  Rng rng(70);
  const StiefelPoint p(haar_unitary(6, rng).leftCols(2), 2);
  const CMatrix g = random_matrix(6, 2, rng);
  EXPECT_EQ(cayley_update(p, g, 0.0).kappa(), p.kappa());
  EXPECT_EQ(cayley_update(p, CMatrix::Zero(6, 2), 0.3).kappa(), p.kappa());
  EXPECT_THROW(cayley_update(p, CMatrix::Zero(4, 2), 0.3), DimensionError);
}

TEST(CayleyUpdate, StaysOnTheManifold) {
  Rng rng(71);
  for (int trial = 0; trial < 50; ++trial) {
    const StiefelPoint p(haar_unitary(12, rng).leftCols(4), 4);
    const StiefelPoint q = cayley_update(p, random_matrix(12, 4, rng), 0.05);
    EXPECT_LT(q.defect(), 1e-10);
  }
}

TEST(CayleyUpdate, LongRunDrift) {
  Rng rng(72);
  StiefelPoint p(haar_unitary(12, rng).leftCols(4), 4);
  for (int i = 0; i < 1000; ++i) p = cayley_update(p, random_matrix(12, 4, rng), 0.05);
  EXPECT_LT(p.defect(), 1e-8);
}

TEST(CayleyUpdate, DescendsAlongTheLossGradient) {
  for (std::uint64_t seed = 80; seed < 90; ++seed) {
    const Trajectory traj = random_trajectory(2, 3, 2, seed);
    Rng rng(seed);
    BackwardModel m = init_backward(3, 2, 4, rng);
    const LossSpec spec = spec_of(LossKind::pc);
    const double before = model_loss(m, traj, spec);
    const auto g = loss_gradient(m, traj, spec);
    // backtracking must terminate
    bool decreased = false;
    for (double tau = 0.05; tau > 1e-8 && !decreased; tau *= 0.5) {
      BackwardModel trial = m;
      for (std::size_t b = 0; b < g.size(); ++b) trial.blocks[b] = cayley_update(m.blocks[b], g[b], tau);
      decreased = model_loss(trial, traj, spec) < before;
    }
    EXPECT_TRUE(decreased);
  }
}

TEST(CayleyUpdate, FirstOrderDirection) {
  Rng rng(90);
  const StiefelPoint p(haar_unitary(8, rng).leftCols(2), 2);
  const CMatrix g = random_matrix(8, 2, rng);
  const double tau = 1e-6;
  const CMatrix step = (cayley_update(p, g, tau).kappa() - p.kappa()) / tau;
  const CMatrix direction = -(g - p.kappa() * g.adjoint() * p.kappa());
  EXPECT_LT((step - direction).norm(), 1e-5 * direction.norm());
}
